#pragma once

#include "navmorph/tensor.hpp"

namespace navmorph {

// Diagonal Gaussian; sigma is strictly positive elementwise.
struct GaussianParams {
    Tensor mu;
    Tensor sigma;

    std::size_t dim() const { return mu.size(); }

    static GaussianParams standard_normal(std::size_t d) {
        return {Tensor::zeros(d), Tensor::constant(std::vector<double>(d, 1.0))};
    }
};

} // namespace navmorph
