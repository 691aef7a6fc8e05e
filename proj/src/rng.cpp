#include "navmorph/rng.hpp"

#include <cmath>

namespace navmorph {

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    const double u1 = uniform_open();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
}

std::vector<double> Rng::normal_vec(std::size_t n, double mean, double stddev) {
    std::vector<double> out(n);
    for (auto& v : out) {
        v = mean + stddev * normal();
    }
    return out;
}

} // namespace navmorph
