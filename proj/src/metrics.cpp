#include "navmorph/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "navmorph/losses.hpp"

namespace navmorph {

namespace {

double dist(const Point& a, const Point& b) {
    return std::hypot(a[0] - b[0], a[1] - b[1]);
}

std::vector<std::vector<double>> as_rows(const std::vector<Point>& pts) {
    std::vector<std::vector<double>> rows;
    rows.reserve(pts.size());
    for (const auto& p : pts) {
        rows.push_back({p[0], p[1]});
    }
    return rows;
}

} // namespace

MetricReport evaluate(const Trajectory& traj) {
    if (traj.positions.empty()) {
        throw std::invalid_argument("evaluate: trajectory has no positions");
    }
    if (traj.reference.empty()) {
        throw std::invalid_argument("evaluate: reference path is empty");
    }
    if (!(traj.shortest_path_length > 0.0)) {
        throw std::invalid_argument("evaluate: shortest_path_length must be positive");
    }

    MetricReport r;
    for (std::size_t i = 0; i + 1 < traj.positions.size(); ++i) {
        r.tl += dist(traj.positions[i], traj.positions[i + 1]);
    }
    r.ne = dist(traj.positions.back(), traj.goal);
    r.sr = (r.ne <= traj.success_threshold) ? 1.0 : 0.0;

    double closest = r.ne;
    for (const auto& p : traj.positions) {
        closest = std::min(closest, dist(p, traj.goal));
    }
    r.osr = (closest <= traj.success_threshold) ? 1.0 : 0.0;

    r.spl = r.sr * traj.shortest_path_length / std::max(r.tl, traj.shortest_path_length);
    r.ndtw = ndtw_value(as_rows(traj.reference), as_rows(traj.positions), traj.success_threshold);
    r.sdtw = r.sr * r.ndtw;
    return r;
}

MetricReport aggregate(const std::vector<MetricReport>& reports) {
    if (reports.empty()) {
        throw std::invalid_argument("aggregate: no reports");
    }
    MetricReport mean;
    for (const auto& r : reports) {
        mean.tl += r.tl;
        mean.ne += r.ne;
        mean.sr += r.sr;
        mean.osr += r.osr;
        mean.spl += r.spl;
        mean.ndtw += r.ndtw;
        mean.sdtw += r.sdtw;
    }
    const double n = static_cast<double>(reports.size());
    mean.tl /= n;
    mean.ne /= n;
    mean.sr /= n;
    mean.osr /= n;
    mean.spl /= n;
    mean.ndtw /= n;
    mean.sdtw /= n;
    return mean;
}

} // namespace navmorph
