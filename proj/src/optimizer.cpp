#include "navmorph/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace navmorph {

AdamOptimizer::AdamOptimizer(double learning_rate, double beta1, double beta2, double epsilon)
    : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(epsilon) {
    if (!(learning_rate > 0.0)) {
        throw std::invalid_argument("AdamOptimizer: learning rate must be positive");
    }
}

void AdamOptimizer::step(ParamSet& params) {
    ++step_count_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(step_count_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(step_count_));

    for (auto& p : params.items()) {
        auto node = p.tensor.node();
        node->ensure_grad();
        auto& moments = moments_[p.name];
        if (moments.m.size() != node->value.size()) {
            moments.m.assign(node->value.size(), 0.0);
            moments.v.assign(node->value.size(), 0.0);
        }
        for (std::size_t i = 0; i < node->value.size(); ++i) {
            const double g = node->grad[i];
            if (!std::isfinite(g)) {
                throw NumericError("AdamOptimizer: non-finite gradient in parameter '" + p.name + "'");
            }
            moments.m[i] = beta1_ * moments.m[i] + (1.0 - beta1_) * g;
            moments.v[i] = beta2_ * moments.v[i] + (1.0 - beta2_) * g * g;
            const double m_hat = moments.m[i] / bc1;
            const double v_hat = moments.v[i] / bc2;
            node->value[i] -= lr_ * m_hat / (std::sqrt(v_hat) + eps_);
        }
    }
    params.zero_grad();
}

} // namespace navmorph
