#include "navmorph/gradcheck.hpp"

#include <cmath>

namespace navmorph {

double relative_error(double analytic, double numeric, double floor) {
    const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
    return std::abs(analytic - numeric) / denom;
}

GradCheckReport finite_difference_check(ParamSet& params,
                                        const std::function<Tensor()>& loss,
                                        double step) {
    params.zero_grad();
    {
        Tape tape;
        TapeScope scope(tape);
        Tensor out = loss();
        tape.backward(out);
    }
    // Snapshot analytic gradients before perturbing anything.
    std::vector<std::vector<double>> analytic;
    analytic.reserve(params.size());
    for (auto& p : params.items()) {
        p.tensor.node()->ensure_grad();
        analytic.push_back(p.tensor.grad());
    }

    GradCheckReport report;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        auto& p = params.items()[pi];
        auto& values = p.tensor.mutable_value();
        for (std::size_t i = 0; i < values.size(); ++i) {
            const double saved = values[i];
            values[i] = saved + step;
            const double plus = loss().item();
            values[i] = saved - step;
            const double minus = loss().item();
            values[i] = saved;
            const double numeric = (plus - minus) / (2.0 * step);
            const double err = relative_error(analytic[pi][i], numeric);
            ++report.checked;
            if (err > report.max_rel_error) {
                report.max_rel_error = err;
                report.worst_param = p.name + "[" + std::to_string(i) + "]";
            }
        }
    }
    params.zero_grad();
    return report;
}

} // namespace navmorph
