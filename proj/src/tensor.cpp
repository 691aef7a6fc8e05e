#include "navmorph/tensor.hpp"

#include <cmath>
#include <cstdio>
#include <utility>

namespace navmorph {

namespace {

thread_local Tape* g_active_tape = nullptr;

void check_finite(const std::vector<double>& v, const char* op, const char* phase) {
    for (double x : v) {
        if (!std::isfinite(x)) {
            throw NumericError(std::string(phase) + " of op '" + op + "' produced a non-finite value");
        }
    }
}

std::size_t numel(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (auto d : shape) {
        n *= d;
    }
    return n;
}

void accumulate(TensorNode& target, const std::vector<double>& g) {
    target.ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) {
        target.grad[i] += g[i];
    }
}

// Builds the output node of an op. A graph edge is created only when some
// parent requires grad and a tape is active.
Tensor make_op(const char* op, std::vector<double> value, std::vector<std::size_t> shape,
               const std::vector<NodePtr>& parents,
               const std::function<void(TensorNode&)>& backprop) {
    check_finite(value, op, "forward");
    auto node = std::make_shared<TensorNode>();
    node->shape = std::move(shape);
    node->value = std::move(value);
    node->op = op;

    Tape* tape = g_active_tape;
    bool needs_grad = false;
    if (tape != nullptr) {
        for (const auto& p : parents) {
            if (p && p->requires_grad) {
                needs_grad = true;
                break;
            }
        }
    }
    if (needs_grad) {
        node->requires_grad = true;
        TensorNode* raw = node.get();
        node->backprop = [raw, backprop]() { backprop(*raw); };
        tape->record(node);
    }
    return Tensor(node);
}

void require_same_size(const Tensor& a, const Tensor& b, const char* op) {
    if (a.size() != b.size()) {
        throw std::invalid_argument(std::string(op) + ": size mismatch (" +
                                    std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
    }
}

Tensor unary_map(const char* op, const Tensor& a,
                 const std::function<double(double)>& f,
                 const std::function<double(double /*x*/, double /*y*/)>& dfdx) {
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = f(a.value()[i]);
    }
    NodePtr pa = a.node();
    return make_op(op, std::move(out), a.shape(), {pa}, [pa, dfdx](TensorNode& self) {
        if (!pa->requires_grad) {
            return;
        }
        std::vector<double> g(self.size());
        for (std::size_t i = 0; i < g.size(); ++i) {
            g[i] = self.grad[i] * dfdx(pa->value[i], self.value[i]);
        }
        accumulate(*pa, g);
    });
}

} // namespace

Tensor Tensor::constant(std::vector<double> data) {
    auto n = data.size();
    return constant(std::move(data), {n});
}

Tensor Tensor::constant(std::vector<double> data, std::vector<std::size_t> shape) {
    if (numel(shape) != data.size()) {
        throw std::invalid_argument("Tensor::constant: shape does not match data length");
    }
    check_finite(data, "constant", "forward");
    auto node = std::make_shared<TensorNode>();
    node->shape = std::move(shape);
    node->value = std::move(data);
    return Tensor(node);
}

Tensor Tensor::leaf(std::vector<double> data, std::vector<std::size_t> shape) {
    if (numel(shape) != data.size()) {
        throw std::invalid_argument("Tensor::leaf: shape does not match data length");
    }
    check_finite(data, "leaf", "forward");
    auto node = std::make_shared<TensorNode>();
    node->shape = std::move(shape);
    node->value = std::move(data);
    node->requires_grad = true;
    node->ensure_grad();
    return Tensor(node);
}

double Tensor::item() const {
    if (size() != 1) {
        throw std::invalid_argument("Tensor::item: tensor is not scalar");
    }
    return node_->value[0];
}

void Tape::backward(const Tensor& output) {
    if (!output.defined() || output.size() != 1) {
        throw std::invalid_argument("Tape::backward: output must be a scalar");
    }
    if (!output.node()->requires_grad) {
        return; // constant output: all gradients are zero
    }
    output.node()->ensure_grad();
    output.node()->grad[0] += 1.0;
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
        TensorNode& n = **it;
        if (n.grad.empty()) {
            continue; // not on any path to the output
        }
        check_finite(n.grad, n.op, "backward");
        if (n.backprop) {
            n.backprop();
        }
    }
}

TapeScope::TapeScope(Tape& tape) : previous_(g_active_tape) { g_active_tape = &tape; }
TapeScope::~TapeScope() { g_active_tape = previous_; }

NoGradScope::NoGradScope() : previous_(g_active_tape) { g_active_tape = nullptr; }
NoGradScope::~NoGradScope() { g_active_tape = previous_; }

Tape* active_tape() { return g_active_tape; }

Tensor add(const Tensor& a, const Tensor& b) {
    require_same_size(a, b, "add");
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = a.value()[i] + b.value()[i];
    }
    NodePtr pa = a.node(), pb = b.node();
    return make_op("add", std::move(out), a.shape(), {pa, pb}, [pa, pb](TensorNode& self) {
        if (pa->requires_grad) {
            accumulate(*pa, self.grad);
        }
        if (pb->requires_grad) {
            accumulate(*pb, self.grad);
        }
    });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    require_same_size(a, b, "sub");
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = a.value()[i] - b.value()[i];
    }
    NodePtr pa = a.node(), pb = b.node();
    return make_op("sub", std::move(out), a.shape(), {pa, pb}, [pa, pb](TensorNode& self) {
        if (pa->requires_grad) {
            accumulate(*pa, self.grad);
        }
        if (pb->requires_grad) {
            std::vector<double> g(self.size());
            for (std::size_t i = 0; i < g.size(); ++i) {
                g[i] = -self.grad[i];
            }
            accumulate(*pb, g);
        }
    });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    require_same_size(a, b, "mul");
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = a.value()[i] * b.value()[i];
    }
    NodePtr pa = a.node(), pb = b.node();
    return make_op("mul", std::move(out), a.shape(), {pa, pb}, [pa, pb](TensorNode& self) {
        if (pa->requires_grad) {
            std::vector<double> g(self.size());
            for (std::size_t i = 0; i < g.size(); ++i) {
                g[i] = self.grad[i] * pb->value[i];
            }
            accumulate(*pa, g);
        }
        if (pb->requires_grad) {
            std::vector<double> g(self.size());
            for (std::size_t i = 0; i < g.size(); ++i) {
                g[i] = self.grad[i] * pa->value[i];
            }
            accumulate(*pb, g);
        }
    });
}

Tensor div(const Tensor& a, const Tensor& b) {
    require_same_size(a, b, "div");
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = a.value()[i] / b.value()[i];
    }
    NodePtr pa = a.node(), pb = b.node();
    return make_op("div", std::move(out), a.shape(), {pa, pb}, [pa, pb](TensorNode& self) {
        if (pa->requires_grad) {
            std::vector<double> g(self.size());
            for (std::size_t i = 0; i < g.size(); ++i) {
                g[i] = self.grad[i] / pb->value[i];
            }
            accumulate(*pa, g);
        }
        if (pb->requires_grad) {
            std::vector<double> g(self.size());
            for (std::size_t i = 0; i < g.size(); ++i) {
                const double bb = pb->value[i];
                g[i] = -self.grad[i] * pa->value[i] / (bb * bb);
            }
            accumulate(*pb, g);
        }
    });
}

Tensor scale(const Tensor& a, double c) {
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = a.value()[i] * c;
    }
    NodePtr pa = a.node();
    return make_op("scale", std::move(out), a.shape(), {pa}, [pa, c](TensorNode& self) {
        if (!pa->requires_grad) {
            return;
        }
        std::vector<double> g(self.size());
        for (std::size_t i = 0; i < g.size(); ++i) {
            g[i] = self.grad[i] * c;
        }
        accumulate(*pa, g);
    });
}

Tensor add_scalar(const Tensor& a, double c) {
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = a.value()[i] + c;
    }
    NodePtr pa = a.node();
    return make_op("add_scalar", std::move(out), a.shape(), {pa}, [pa](TensorNode& self) {
        if (pa->requires_grad) {
            accumulate(*pa, self.grad);
        }
    });
}

Tensor tanh(const Tensor& a) {
    return unary_map("tanh", a,
                     [](double x) { return std::tanh(x); },
                     [](double, double y) { return 1.0 - y * y; });
}

Tensor sigmoid(const Tensor& a) {
    return unary_map("sigmoid", a,
                     [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
                     [](double, double y) { return y * (1.0 - y); });
}

Tensor exp(const Tensor& a) {
    return unary_map("exp", a,
                     [](double x) { return std::exp(x); },
                     [](double, double y) { return y; });
}

Tensor log(const Tensor& a) {
    return unary_map("log", a,
                     [](double x) { return std::log(x); },
                     [](double x, double) { return 1.0 / x; });
}

Tensor square(const Tensor& a) {
    return unary_map("square", a,
                     [](double x) { return x * x; },
                     [](double x, double) { return 2.0 * x; });
}

Tensor softplus_floor(const Tensor& raw, double floor) {
    if (!(floor > 0.0)) {
        throw std::invalid_argument("softplus_floor: floor must be positive");
    }
    return unary_map("softplus_floor", raw,
                     [floor](double x) {
                         const double sp = std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
                         return floor + sp;
                     },
                     [](double x, double) { return 1.0 / (1.0 + std::exp(-x)); });
}

Tensor sum(const Tensor& a) {
    double s = 0.0;
    for (double v : a.value()) {
        s += v;
    }
    NodePtr pa = a.node();
    return make_op("sum", {s}, {1}, {pa}, [pa](TensorNode& self) {
        if (!pa->requires_grad) {
            return;
        }
        std::vector<double> g(pa->value.size(), self.grad[0]);
        accumulate(*pa, g);
    });
}

Tensor mean(const Tensor& a) {
    if (a.size() == 0) {
        throw std::invalid_argument("mean: empty tensor");
    }
    return scale(sum(a), 1.0 / static_cast<double>(a.size()));
}

Tensor sum_squares(const Tensor& a) {
    double s = 0.0;
    for (double v : a.value()) {
        s += v * v;
    }
    NodePtr pa = a.node();
    return make_op("sum_squares", {s}, {1}, {pa}, [pa](TensorNode& self) {
        if (!pa->requires_grad) {
            return;
        }
        std::vector<double> g(pa->value.size());
        for (std::size_t i = 0; i < g.size(); ++i) {
            g[i] = self.grad[0] * 2.0 * pa->value[i];
        }
        accumulate(*pa, g);
    });
}

Tensor euclid_norm(const Tensor& a) {
    double s = 0.0;
    for (double v : a.value()) {
        s += v * v;
    }
    const double n = std::sqrt(s);
    NodePtr pa = a.node();
    return make_op("euclid_norm", {n}, {1}, {pa}, [pa](TensorNode& self) {
        if (!pa->requires_grad) {
            return;
        }
        const double y = self.value[0];
        if (y == 0.0) {
            return; // subgradient 0 at the origin
        }
        std::vector<double> g(pa->value.size());
        for (std::size_t i = 0; i < g.size(); ++i) {
            g[i] = self.grad[0] * pa->value[i] / y;
        }
        accumulate(*pa, g);
    });
}

Tensor concat(const std::vector<Tensor>& parts) {
    if (parts.empty()) {
        throw std::invalid_argument("concat: no inputs");
    }
    std::vector<double> out;
    std::vector<NodePtr> parents;
    parents.reserve(parts.size());
    for (const auto& p : parts) {
        out.insert(out.end(), p.value().begin(), p.value().end());
        parents.push_back(p.node());
    }
    const std::size_t n = out.size();
    return make_op("concat", std::move(out), {n}, parents, [parents](TensorNode& self) {
        std::size_t off = 0;
        for (const auto& p : parents) {
            if (p->requires_grad) {
                std::vector<double> g(p->value.size());
                for (std::size_t i = 0; i < g.size(); ++i) {
                    g[i] = self.grad[off + i];
                }
                accumulate(*p, g);
            }
            off += p->value.size();
        }
    });
}

Tensor slice(const Tensor& a, std::size_t offset, std::size_t len) {
    if (offset + len > a.size()) {
        throw std::invalid_argument("slice: range out of bounds");
    }
    std::vector<double> out(a.value().begin() + static_cast<std::ptrdiff_t>(offset),
                            a.value().begin() + static_cast<std::ptrdiff_t>(offset + len));
    NodePtr pa = a.node();
    return make_op("slice", std::move(out), {len}, {pa}, [pa, offset](TensorNode& self) {
        if (!pa->requires_grad) {
            return;
        }
        pa->ensure_grad();
        for (std::size_t i = 0; i < self.size(); ++i) {
            pa->grad[offset + i] += self.grad[i];
        }
    });
}

Tensor affine(const Tensor& input, const Tensor& weights, const Tensor& bias) {
    if (weights.shape().size() != 2) {
        throw std::invalid_argument("affine: weights must be 2-D");
    }
    const std::size_t m = weights.shape()[0];
    const std::size_t n = weights.shape()[1];
    if (input.size() != n || bias.size() != m) {
        throw std::invalid_argument("affine: dimension mismatch");
    }
    std::vector<double> out(m);
    const auto& w = weights.value();
    const auto& x = input.value();
    for (std::size_t i = 0; i < m; ++i) {
        double acc = bias.value()[i];
        const double* row = w.data() + i * n;
        for (std::size_t j = 0; j < n; ++j) {
            acc += row[j] * x[j];
        }
        out[i] = acc;
    }
    NodePtr px = input.node(), pw = weights.node(), pb = bias.node();
    return make_op("affine", std::move(out), {m}, {px, pw, pb}, [px, pw, pb, m, n](TensorNode& self) {
        if (px->requires_grad) {
            std::vector<double> g(n, 0.0);
            for (std::size_t i = 0; i < m; ++i) {
                const double gi = self.grad[i];
                const double* row = pw->value.data() + i * n;
                for (std::size_t j = 0; j < n; ++j) {
                    g[j] += gi * row[j];
                }
            }
            accumulate(*px, g);
        }
        if (pw->requires_grad) {
            pw->ensure_grad();
            for (std::size_t i = 0; i < m; ++i) {
                const double gi = self.grad[i];
                double* row = pw->grad.data() + i * n;
                for (std::size_t j = 0; j < n; ++j) {
                    row[j] += gi * px->value[j];
                }
            }
        }
        if (pb->requires_grad) {
            accumulate(*pb, self.grad);
        }
    });
}

Tensor sample_gaussian(const Tensor& mu, const Tensor& sigma, Rng& rng) {
    require_same_size(mu, sigma, "sample_gaussian");
    for (double s : sigma.value()) {
        if (!(s > 0.0)) {
            throw std::domain_error("sample_gaussian: sigma must be strictly positive");
        }
    }
    Tensor eps = Tensor::constant(rng.normal_vec(mu.size()));
    return add(mu, mul(sigma, eps));
}

} // namespace navmorph
