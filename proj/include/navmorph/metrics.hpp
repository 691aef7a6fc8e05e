#pragma once

#include <array>
#include <vector>

namespace navmorph {

using Point = std::array<double, 2>;

struct Trajectory {
    std::vector<Point> positions;  // visited positions, start first
    std::vector<Point> reference;  // ground-truth path
    Point goal{0.0, 0.0};
    double shortest_path_length = 1.0;
    double success_threshold = 0.5;
};

struct MetricReport {
    double tl = 0.0;
    double ne = 0.0;
    double sr = 0.0;
    double osr = 0.0;
    double spl = 0.0;
    double ndtw = 0.0;
    double sdtw = 0.0;
};

// Per-episode navigation metrics: trajectory length, navigation error,
// success, oracle success, success weighted by path length, path-fidelity
// warping score, and its success-weighted variant.
MetricReport evaluate(const Trajectory& traj);

// Arithmetic mean per field; sr/osr become rates.
MetricReport aggregate(const std::vector<MetricReport>& reports);

} // namespace navmorph
