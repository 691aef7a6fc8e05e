#pragma once

#include <functional>
#include <string>
#include <vector>

#include "navmorph/layers.hpp"

namespace navmorph {

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::string worst_param;
    std::size_t checked = 0;
};

// Compares analytic gradients against central finite differences for every
// scalar in the parameter set. `loss` must rebuild the forward pass from
// the current parameter values on each call; analytic gradients are taken
// from one taped evaluation of the same function.
GradCheckReport finite_difference_check(ParamSet& params,
                                        const std::function<Tensor()>& loss,
                                        double step = 1e-5);

// max(|a - f|) / max(|a|, |f|, floor): relative when the pair is large,
// absolute near zero.
double relative_error(double analytic, double numeric, double floor = 1e-8);

} // namespace navmorph
