#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "navmorph/layers.hpp"

namespace navmorph {

// Adaptive-moment gradient descent (Adam). Moment buffers are keyed by
// parameter name and sized on first use.
class AdamOptimizer {
public:
    explicit AdamOptimizer(double learning_rate, double beta1 = 0.9, double beta2 = 0.999,
                           double epsilon = 1e-8);

    // Applies one update from the gradients stored on the parameters, then
    // clears them. Throws NumericError naming the parameter on NaN/Inf
    // gradients.
    void step(ParamSet& params);

    std::uint64_t step_count() const { return step_count_; }
    double learning_rate() const { return lr_; }
    void set_learning_rate(double lr) { lr_ = lr; }

private:
    struct Moments {
        std::vector<double> m;
        std::vector<double> v;
    };

    double lr_;
    double beta1_;
    double beta2_;
    double eps_;
    std::uint64_t step_count_ = 0;
    std::unordered_map<std::string, Moments> moments_;
};

} // namespace navmorph
