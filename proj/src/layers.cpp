#include "navmorph/layers.hpp"

#include <cmath>
#include <stdexcept>

namespace navmorph {

Tensor ParamSet::add(const std::string& name, std::vector<double> data, std::vector<std::size_t> shape) {
    if (index_.count(name) != 0) {
        throw std::invalid_argument("ParamSet: duplicate parameter name '" + name + "'");
    }
    Tensor t = Tensor::leaf(std::move(data), std::move(shape));
    index_[name] = params_.size();
    params_.push_back(Parameter{name, t});
    return t;
}

Parameter& ParamSet::at(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) {
        throw std::invalid_argument("ParamSet: unknown parameter '" + name + "'");
    }
    return params_[it->second];
}

const Parameter& ParamSet::at(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) {
        throw std::invalid_argument("ParamSet: unknown parameter '" + name + "'");
    }
    return params_[it->second];
}

void ParamSet::zero_grad() {
    for (auto& p : params_) {
        p.tensor.zero_grad();
    }
}

std::size_t ParamSet::scalar_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) {
        n += p.tensor.size();
    }
    return n;
}

AffineLayer::AffineLayer(ParamSet& params, const std::string& prefix, std::size_t in, std::size_t out, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    std::vector<double> w(out * in);
    for (auto& v : w) {
        v = rng.uniform_range(-bound, bound);
    }
    weights = params.add(prefix + ".w", std::move(w), {out, in});
    bias = params.add(prefix + ".b", std::vector<double>(out, 0.0), {out});
}

Mlp::Mlp(ParamSet& params, const std::string& prefix, const std::vector<std::size_t>& dims, Rng& rng) {
    if (dims.size() < 2) {
        throw std::invalid_argument("Mlp: need at least input and output dims");
    }
    for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
        layers_.emplace_back(params, prefix + ".l" + std::to_string(i), dims[i], dims[i + 1], rng);
    }
}

Tensor Mlp::forward(const Tensor& x) const {
    Tensor h = x;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        h = layers_[i].forward(h);
        if (i + 1 < layers_.size()) {
            h = tanh(h);
        }
    }
    return h;
}

GruCell::GruCell(ParamSet& params, const std::string& prefix, std::size_t d_hidden, std::size_t d_input, Rng& rng)
    : d_hidden_(d_hidden),
      d_input_(d_input),
      update_gate_(params, prefix + ".z", d_hidden + d_input, d_hidden, rng),
      reset_gate_(params, prefix + ".r", d_hidden + d_input, d_hidden, rng),
      candidate_(params, prefix + ".n", d_hidden + d_input, d_hidden, rng) {}

Tensor GruCell::forward(const Tensor& h_prev, const Tensor& input) const {
    if (h_prev.size() != d_hidden_ || input.size() != d_input_) {
        throw std::invalid_argument("GruCell: dimension mismatch");
    }
    Tensor hx = concat({h_prev, input});
    Tensor z = sigmoid(update_gate_.forward(hx));
    Tensor r = sigmoid(reset_gate_.forward(hx));
    Tensor n = tanh(candidate_.forward(concat({mul(r, h_prev), input})));
    // h' = z * h_prev + (1 - z) * n
    Tensor keep = mul(z, h_prev);
    Tensor ones = Tensor::constant(std::vector<double>(d_hidden_, 1.0));
    Tensor write = mul(sub(ones, z), n);
    return add(keep, write);
}

} // namespace navmorph
