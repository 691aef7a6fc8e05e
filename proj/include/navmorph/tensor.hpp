#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "navmorph/rng.hpp"

namespace navmorph {

// Raised whenever a forward or backward computation produces NaN/Inf; the
// message names the offending operation.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

struct TensorNode {
    std::vector<std::size_t> shape;
    std::vector<double> value;
    std::vector<double> grad;          // allocated lazily, same length as value
    bool requires_grad = false;
    const char* op = "leaf";
    std::function<void()> backprop;    // owns shared_ptrs to parent nodes

    std::size_t size() const { return value.size(); }
    void ensure_grad() {
        if (grad.size() != value.size()) {
            grad.assign(value.size(), 0.0);
        }
    }
};

using NodePtr = std::shared_ptr<TensorNode>;

// Dense real-valued array participating in reverse-mode differentiation.
// Most tensors here are 1-D vectors; 2-D shapes appear only as affine
// weight matrices (row-major).
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(NodePtr node) : node_(std::move(node)) {}

    // Constant (non-differentiable) tensors.
    static Tensor constant(std::vector<double> data);
    static Tensor constant(std::vector<double> data, std::vector<std::size_t> shape);
    static Tensor scalar(double v) { return constant({v}); }
    static Tensor zeros(std::size_t n) { return constant(std::vector<double>(n, 0.0)); }

    // Leaf with gradient storage (parameters are built from these).
    static Tensor leaf(std::vector<double> data, std::vector<std::size_t> shape);

    bool defined() const { return node_ != nullptr; }
    std::size_t size() const { return node_->size(); }
    const std::vector<std::size_t>& shape() const { return node_->shape; }
    const std::vector<double>& value() const { return node_->value; }
    std::vector<double>& mutable_value() { return node_->value; }
    const std::vector<double>& grad() const { return node_->grad; }
    bool requires_grad() const { return node_ && node_->requires_grad; }
    double item() const;
    double operator[](std::size_t i) const { return node_->value[i]; }

    void zero_grad() {
        if (node_) {
            node_->grad.assign(node_->value.size(), 0.0);
        }
    }

    NodePtr node() const { return node_; }

private:
    NodePtr node_;
};

// Ordered record of the operations of one forward pass. Nodes are appended
// in creation order, which is a valid topological order, so the backward
// pass is a single reverse sweep that visits each node exactly once.
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    std::size_t size() const { return nodes_.size(); }
    void record(NodePtr n) { nodes_.push_back(std::move(n)); }
    void clear() { nodes_.clear(); }

    // Seeds d(output)/d(output) = 1 and propagates to every recorded node
    // and leaf. Output must be scalar.
    void backward(const Tensor& output);

private:
    std::vector<NodePtr> nodes_;
};

// Scoped activation of a tape; ops record onto the innermost active tape.
// No active tape means forward values only (no graph is built).
class TapeScope {
public:
    explicit TapeScope(Tape& tape);
    ~TapeScope();
    TapeScope(const TapeScope&) = delete;
    TapeScope& operator=(const TapeScope&) = delete;

private:
    Tape* previous_;
};

Tape* active_tape();

// Temporarily disables graph recording (used around memory-bank access and
// evaluation-mode forward passes).
class NoGradScope {
public:
    NoGradScope();
    ~NoGradScope();

private:
    Tape* previous_;
};

// ---- elementwise / reduction ops ------------------------------------------

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);
Tensor add_scalar(const Tensor& a, double c);
Tensor tanh(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor square(const Tensor& a);

// floor + log(1 + exp(raw)); strictly >= floor, numerically stable.
Tensor softplus_floor(const Tensor& raw, double floor);

Tensor sum(const Tensor& a);                  // -> scalar
Tensor mean(const Tensor& a);                 // -> scalar
Tensor sum_squares(const Tensor& a);          // -> scalar, sum of a_i^2
Tensor euclid_norm(const Tensor& a);          // -> scalar; subgradient 0 at 0

Tensor concat(const std::vector<Tensor>& parts);
Tensor slice(const Tensor& a, std::size_t offset, std::size_t len);

// y = W x + b with W of shape [m, n] (row-major), x of shape [n].
Tensor affine(const Tensor& input, const Tensor& weights, const Tensor& bias);

// mu + sigma * eps with eps ~ N(0, I) treated as constant; differentiable
// w.r.t. mu and sigma. All sigma entries must be positive.
Tensor sample_gaussian(const Tensor& mu, const Tensor& sigma, Rng& rng);

} // namespace navmorph
