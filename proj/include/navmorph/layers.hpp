#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "navmorph/tensor.hpp"

namespace navmorph {

// Named trainable tensor. The gradient buffer lives on the leaf node.
struct Parameter {
    std::string name;
    Tensor tensor;
};

// Ordered collection of uniquely named parameters.
class ParamSet {
public:
    Tensor add(const std::string& name, std::vector<double> data, std::vector<std::size_t> shape);

    Parameter& at(const std::string& name);
    const Parameter& at(const std::string& name) const;
    bool contains(const std::string& name) const { return index_.count(name) != 0; }

    std::vector<Parameter>& items() { return params_; }
    const std::vector<Parameter>& items() const { return params_; }
    std::size_t size() const { return params_.size(); }

    void zero_grad();
    std::size_t scalar_count() const;

private:
    std::vector<Parameter> params_;
    std::unordered_map<std::string, std::size_t> index_;
};

// Fan-in uniform init: U[-1/sqrt(fan_in), +1/sqrt(fan_in)], zero biases.
struct AffineLayer {
    Tensor weights; // [out, in]
    Tensor bias;    // [out]

    AffineLayer() = default;
    AffineLayer(ParamSet& params, const std::string& prefix, std::size_t in, std::size_t out, Rng& rng);

    Tensor forward(const Tensor& x) const { return affine(x, weights, bias); }
};

// Feed-forward stack with tanh between layers and a linear output.
class Mlp {
public:
    Mlp() = default;
    Mlp(ParamSet& params, const std::string& prefix, const std::vector<std::size_t>& dims, Rng& rng);

    Tensor forward(const Tensor& x) const;

private:
    std::vector<AffineLayer> layers_;
};

// Single-layer gated recurrent unit. Gates read the concatenation
// [h_prev, input]; with all-zero parameters the output is 0.5 * h_prev.
class GruCell {
public:
    GruCell() = default;
    GruCell(ParamSet& params, const std::string& prefix, std::size_t d_hidden, std::size_t d_input, Rng& rng);

    Tensor forward(const Tensor& h_prev, const Tensor& input) const;

    std::size_t hidden_size() const { return d_hidden_; }
    std::size_t input_size() const { return d_input_; }

private:
    std::size_t d_hidden_ = 0;
    std::size_t d_input_ = 0;
    AffineLayer update_gate_;
    AffineLayer reset_gate_;
    AffineLayer candidate_;
};

} // namespace navmorph
