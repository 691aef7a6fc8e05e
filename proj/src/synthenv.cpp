#include "navmorph/synthenv.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <stdexcept>

#include <json.hpp>

#include "navmorph/io.hpp"

namespace navmorph {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double dist(const Point& a, const Point& b) {
    return std::hypot(a[0] - b[0], a[1] - b[1]);
}

// Entry parameter of the segment p + t*d into the open interior of r, or
// +inf when the segment never crosses the interior for t in [0, 1).
double interior_entry(const Rect& r, const Point& p, const Point& d) {
    double t_enter = -kInf;
    double t_exit = kInf;
    const double lo[2] = {r.xmin, r.ymin};
    const double hi[2] = {r.xmax, r.ymax};
    for (int axis = 0; axis < 2; ++axis) {
        if (d[axis] == 0.0) {
            if (p[axis] <= lo[axis] || p[axis] >= hi[axis]) {
                return kInf; // parallel and outside the slab
            }
            continue;
        }
        double t0 = (lo[axis] - p[axis]) / d[axis];
        double t1 = (hi[axis] - p[axis]) / d[axis];
        if (t0 > t1) {
            std::swap(t0, t1);
        }
        t_enter = std::max(t_enter, t0);
        t_exit = std::min(t_exit, t1);
    }
    if (t_enter >= t_exit || t_exit <= 0.0 || t_enter >= 1.0) {
        return kInf; // grazing the boundary does not count as crossing
    }
    return t_enter;
}

} // namespace

bool Scene::point_free(const Point& p) const {
    if (p[0] < 0.0 || p[0] > arena_size || p[1] < 0.0 || p[1] > arena_size) {
        return false;
    }
    for (const auto& r : obstacles) {
        if (r.contains_interior(p)) {
            return false;
        }
    }
    return true;
}

double free_travel_fraction(const Scene& scene, const Point& from, const Point& delta) {
    double t_stop = 1.0;
    for (const auto& r : scene.obstacles) {
        const double t = interior_entry(r, from, delta);
        if (t < t_stop) {
            t_stop = std::max(0.0, t);
        }
    }
    // Arena walls: stop where the segment would leave [0, arena]^2.
    for (int axis = 0; axis < 2; ++axis) {
        if (delta[axis] > 0.0) {
            t_stop = std::min(t_stop, (Scene::arena_size - from[axis]) / delta[axis]);
        } else if (delta[axis] < 0.0) {
            t_stop = std::min(t_stop, (0.0 - from[axis]) / delta[axis]);
        }
    }
    return std::clamp(t_stop, 0.0, 1.0);
}

bool segment_free(const Scene& scene, const Point& a, const Point& b) {
    const Point d{b[0] - a[0], b[1] - a[1]};
    for (const auto& r : scene.obstacles) {
        const double t = interior_entry(r, a, d);
        if (t < 1.0) {
            return false;
        }
    }
    return scene.point_free(a) && scene.point_free(b);
}

double ray_distance(const Scene& scene, const Point& origin, double angle) {
    const Point dir{std::cos(angle), std::sin(angle)};
    double best = kInf;
    for (const auto& r : scene.obstacles) {
        const Point big{dir[0] * 100.0, dir[1] * 100.0};
        const double t = interior_entry(r, origin, big);
        if (t < kInf) {
            best = std::min(best, std::max(0.0, t) * 100.0);
        }
    }
    for (int axis = 0; axis < 2; ++axis) {
        if (dir[axis] > 0.0) {
            best = std::min(best, (Scene::arena_size - origin[axis]) / dir[axis]);
        } else if (dir[axis] < 0.0) {
            best = std::min(best, (0.0 - origin[axis]) / dir[axis]);
        }
    }
    return std::max(best, 0.0);
}

Scene generate_scene(std::uint64_t scene_seed, Shift shift) {
    for (std::uint64_t attempt = 0; attempt < 100; ++attempt) {
        Rng rng = Rng(scene_seed).fork(0xA110C000ULL + attempt);
        Scene scene;
        scene.scene_seed = scene_seed;
        scene.shift = shift;
        scene.noise_sigma = (shift == Shift::seen) ? 0.02 : 0.08;

        const bool seen = (shift == Shift::seen);
        const std::int64_t count = seen ? rng.uniform_int(2, 4) : rng.uniform_int(5, 8);
        for (std::int64_t i = 0; i < count; ++i) {
            const double w = seen ? rng.uniform_range(0.8, 2.5) : rng.uniform_range(1.0, 3.2);
            const double h = seen ? rng.uniform_range(0.8, 2.5) : rng.uniform_range(1.0, 3.2);
            const double cx = rng.uniform_range(0.5 + w / 2.0, Scene::arena_size - 0.5 - w / 2.0);
            const double cy = rng.uniform_range(0.5 + h / 2.0, Scene::arena_size - 0.5 - h / 2.0);
            scene.obstacles.push_back(Rect{cx - w / 2.0, cy - h / 2.0, cx + w / 2.0, cy + h / 2.0});
        }

        const std::int64_t n_landmarks = rng.uniform_int(3, 6);
        for (std::int64_t i = 0; i < n_landmarks; ++i) {
            Landmark lm;
            for (int tries = 0; tries < 50; ++tries) {
                lm.position = {rng.uniform_range(0.0, Scene::arena_size),
                               rng.uniform_range(0.0, Scene::arena_size)};
                if (scene.point_free(lm.position)) {
                    break;
                }
            }
            lm.feature = rng.normal_vec(4);
            scene.landmarks.push_back(std::move(lm));
        }

        // Reject layouts whose free space is mostly blocked.
        int free_cells = 0;
        const int probe = 41;
        for (int iy = 0; iy < probe; ++iy) {
            for (int ix = 0; ix < probe; ++ix) {
                const Point p{ix * Scene::arena_size / (probe - 1), iy * Scene::arena_size / (probe - 1)};
                if (scene.point_free(p)) {
                    ++free_cells;
                }
            }
        }
        if (free_cells >= probe * probe / 2) {
            return scene;
        }
    }
    throw std::runtime_error("generate_scene: no viable layout after 100 attempts (seed " +
                             std::to_string(scene_seed) + ")");
}

NavGrid::NavGrid(const Scene& scene, const Point& goal) {
    side_ = static_cast<int>(std::lround(Scene::arena_size / resolution)) + 1;
    free_.assign(static_cast<std::size_t>(side_) * side_, 0);
    dist_.assign(static_cast<std::size_t>(side_) * side_, kInf);

    for (int iy = 0; iy < side_; ++iy) {
        for (int ix = 0; ix < side_; ++ix) {
            const Point p{ix * resolution, iy * resolution};
            free_[static_cast<std::size_t>(index(ix, iy))] = scene.point_free(p) ? 1 : 0;
        }
    }

    const int gx = std::clamp(static_cast<int>(std::lround(goal[0] / resolution)), 0, side_ - 1);
    const int gy = std::clamp(static_cast<int>(std::lround(goal[1] / resolution)), 0, side_ - 1);
    if (!node_free(gx, gy)) {
        return; // goal unreachable; distances stay infinite
    }

    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
    dist_[static_cast<std::size_t>(index(gx, gy))] = 0.0;
    queue.emplace(0.0, index(gx, gy));

    static const int dx[8] = {1, -1, 0, 0, 1, 1, -1, -1};
    static const int dy[8] = {0, 0, 1, -1, 1, -1, 1, -1};
    while (!queue.empty()) {
        const auto [d, node] = queue.top();
        queue.pop();
        if (d > dist_[static_cast<std::size_t>(node)]) {
            continue;
        }
        const int ix = node % side_;
        const int iy = node / side_;
        for (int k = 0; k < 8; ++k) {
            const int nx = ix + dx[k];
            const int ny = iy + dy[k];
            if (nx < 0 || ny < 0 || nx >= side_ || ny >= side_ || !node_free(nx, ny)) {
                continue;
            }
            const bool diagonal = (dx[k] != 0 && dy[k] != 0);
            if (diagonal && (!node_free(ix + dx[k], iy) || !node_free(ix, iy + dy[k]))) {
                continue; // no corner cutting
            }
            const double step = diagonal ? resolution * 1.4142135623730951 : resolution;
            const double nd = d + step;
            auto& slot = dist_[static_cast<std::size_t>(index(nx, ny))];
            if (nd < slot) {
                slot = nd;
                queue.emplace(nd, index(nx, ny));
            }
        }
    }
}

bool NavGrid::node_free(int ix, int iy) const {
    return free_[static_cast<std::size_t>(index(ix, iy))] != 0;
}

double NavGrid::distance_at(const Point& p) const {
    const int ix = std::clamp(static_cast<int>(std::lround(p[0] / resolution)), 0, side_ - 1);
    const int iy = std::clamp(static_cast<int>(std::lround(p[1] / resolution)), 0, side_ - 1);
    return dist_[static_cast<std::size_t>(index(ix, iy))];
}

std::optional<Point> NavGrid::nearest_free_node(const Point& p) const {
    const int cx = std::clamp(static_cast<int>(std::lround(p[0] / resolution)), 0, side_ - 1);
    const int cy = std::clamp(static_cast<int>(std::lround(p[1] / resolution)), 0, side_ - 1);
    for (int radius = 0; radius < side_; ++radius) {
        for (int iy = std::max(0, cy - radius); iy <= std::min(side_ - 1, cy + radius); ++iy) {
            for (int ix = std::max(0, cx - radius); ix <= std::min(side_ - 1, cx + radius); ++ix) {
                if (std::max(std::abs(ix - cx), std::abs(iy - cy)) != radius) {
                    continue;
                }
                if (node_free(ix, iy) && std::isfinite(dist_[static_cast<std::size_t>(index(ix, iy))])) {
                    return Point{ix * resolution, iy * resolution};
                }
            }
        }
    }
    return std::nullopt;
}

std::vector<Point> NavGrid::descent_path(const Point& p, std::size_t max_nodes) const {
    std::vector<Point> path;
    auto start = nearest_free_node(p);
    if (!start) {
        return path;
    }
    int ix = static_cast<int>(std::lround((*start)[0] / resolution));
    int iy = static_cast<int>(std::lround((*start)[1] / resolution));
    static const int dx[8] = {1, -1, 0, 0, 1, 1, -1, -1};
    static const int dy[8] = {0, 0, 1, -1, 1, -1, 1, -1};
    path.push_back({ix * resolution, iy * resolution});
    for (std::size_t n = 0; n < max_nodes; ++n) {
        const double here = dist_[static_cast<std::size_t>(index(ix, iy))];
        if (here == 0.0) {
            break;
        }
        double best = here;
        int bx = ix, by = iy;
        for (int k = 0; k < 8; ++k) {
            const int nx = ix + dx[k];
            const int ny = iy + dy[k];
            if (nx < 0 || ny < 0 || nx >= side_ || ny >= side_ || !node_free(nx, ny)) {
                continue;
            }
            const bool diagonal = (dx[k] != 0 && dy[k] != 0);
            if (diagonal && (!node_free(ix + dx[k], iy) || !node_free(ix, iy + dy[k]))) {
                continue;
            }
            const double d = dist_[static_cast<std::size_t>(index(nx, ny))];
            if (d < best) {
                best = d;
                bx = nx;
                by = ny;
            }
        }
        if (bx == ix && by == iy) {
            break; // plateau; should not happen on a reachable field
        }
        ix = bx;
        iy = by;
        path.push_back({ix * resolution, iy * resolution});
    }
    return path;
}

EpisodeRuntime::EpisodeRuntime(EpisodeSpec spec, std::uint64_t episode_seed)
    : spec_(std::move(spec)),
      position_(spec_.start),
      noise_rng_(Rng(episode_seed).fork(spec_.scene.scene_seed)),
      grid_(spec_.scene, spec_.goal) {}

std::vector<double> EpisodeRuntime::observe() {
    std::vector<double> obs;
    obs.reserve(spec_.obs_dim());
    const double dx = spec_.goal[0] - position_[0];
    const double dy = spec_.goal[1] - position_[1];
    obs.push_back(dx);
    obs.push_back(dy);
    obs.push_back(std::hypot(dx, dy));
    obs.push_back(std::atan2(dy, dx) / 3.14159265358979323846);
    for (std::size_t r = 0; r < spec_.n_rays; ++r) {
        const double angle = 2.0 * 3.14159265358979323846 * static_cast<double>(r) /
                             static_cast<double>(spec_.n_rays);
        const double d = ray_distance(spec_.scene, position_, angle);
        obs.push_back(d + spec_.scene.noise_sigma * noise_rng_.normal());
    }
    return obs;
}

StepResult EpisodeRuntime::step(const Point& delta) {
    if (done_) {
        throw std::logic_error("EpisodeRuntime::step: episode already finished");
    }
    if (!std::isfinite(delta[0]) || !std::isfinite(delta[1])) {
        throw std::invalid_argument("EpisodeRuntime::step: action contains NaN/Inf");
    }
    Point d = delta;
    const double len = std::hypot(d[0], d[1]);
    if (len > spec_.max_step_len) {
        const double f = spec_.max_step_len / len;
        d[0] *= f;
        d[1] *= f;
    }
    const double t = free_travel_fraction(spec_.scene, position_, d);
    position_[0] += t * d[0];
    position_[1] += t * d[1];
    ++steps_;

    reached_goal_ = dist(position_, spec_.goal) <= spec_.success_radius;
    done_ = reached_goal_ || steps_ >= spec_.max_steps;

    StepResult result;
    result.position = position_;
    result.observation = observe();
    result.done = done_;
    result.reached_goal = reached_goal_;
    return result;
}

Point EpisodeRuntime::teacher_action() const { return teacher_action_at(position_); }

Point EpisodeRuntime::teacher_action_at(const Point& p) const {
    const Point to_goal{spec_.goal[0] - p[0], spec_.goal[1] - p[1]};
    const double goal_dist = std::hypot(to_goal[0], to_goal[1]);
    if (goal_dist <= 1e-12) {
        return {0.0, 0.0};
    }
    if (segment_free(spec_.scene, p, spec_.goal)) {
        const double f = std::min(1.0, spec_.max_step_len / goal_dist);
        return {to_goal[0] * f, to_goal[1] * f};
    }
    const auto waypoints = grid_.descent_path(p, 200);
    if (waypoints.empty()) {
        throw std::runtime_error("teacher_action: goal unreachable from current position");
    }
    // String pulling: head for the furthest visible waypoint.
    Point target = waypoints.front();
    for (auto it = waypoints.rbegin(); it != waypoints.rend(); ++it) {
        if (segment_free(spec_.scene, p, *it)) {
            target = *it;
            break;
        }
    }
    Point dir{target[0] - p[0], target[1] - p[1]};
    const double len = std::hypot(dir[0], dir[1]);
    if (len <= 1e-12) {
        // Sitting on the nearest node; aim at the next waypoint instead.
        if (waypoints.size() > 1) {
            dir = {waypoints[1][0] - p[0], waypoints[1][1] - p[1]};
            const double l2 = std::hypot(dir[0], dir[1]);
            const double f = std::min(1.0, spec_.max_step_len / std::max(l2, 1e-12));
            return {dir[0] * f, dir[1] * f};
        }
        return {0.0, 0.0};
    }
    const double f = std::min(1.0, spec_.max_step_len / len);
    return {dir[0] * f, dir[1] * f};
}

std::vector<Point> reference_path(const EpisodeSpec& spec) {
    EpisodeRuntime env(spec, 0);
    std::vector<Point> path{spec.start};
    while (!env.done()) {
        const Point a = env.teacher_action();
        const auto result = env.step(a);
        path.push_back(result.position);
        if (std::hypot(a[0], a[1]) <= 1e-12 && !result.done) {
            break; // stuck; caller treats this as infeasible
        }
    }
    return path;
}

double path_length(const std::vector<Point>& path) {
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
        total += dist(path[i], path[i + 1]);
    }
    return total;
}

Split split_from_name(const std::string& name) {
    if (name == "train_seen") {
        return Split::train_seen;
    }
    if (name == "val_seen") {
        return Split::val_seen;
    }
    if (name == "val_unseen") {
        return Split::val_unseen;
    }
    throw ConfigError("unknown split '" + name + "' (expected train_seen, val_seen, val_unseen)");
}

std::string split_name(Split s) {
    switch (s) {
        case Split::train_seen: return "train_seen";
        case Split::val_seen: return "val_seen";
        case Split::val_unseen: return "val_unseen";
    }
    return "?";
}

Shift split_shift(Split s) {
    return (s == Split::val_unseen) ? Shift::unseen : Shift::seen;
}

namespace {

std::uint64_t split_seed_base(Split s) {
    switch (s) {
        case Split::train_seen: return 10000;
        case Split::val_seen: return 20000;
        case Split::val_unseen: return 30000;
    }
    return 0;
}

std::optional<ManifestEntry> sample_episode(const Scene& scene, Rng& rng) {
    NavGrid probe(scene, {Scene::arena_size / 2.0, Scene::arena_size / 2.0});
    for (int attempt = 0; attempt < 100; ++attempt) {
        const Point start{rng.uniform_range(0.3, Scene::arena_size - 0.3),
                          rng.uniform_range(0.3, Scene::arena_size - 0.3)};
        const Point goal{rng.uniform_range(0.3, Scene::arena_size - 0.3),
                         rng.uniform_range(0.3, Scene::arena_size - 0.3)};
        if (!scene.point_free(start) || !scene.point_free(goal)) {
            continue;
        }
        const double separation = dist(start, goal);
        if (separation < 2.5 || separation > 6.5) {
            continue;
        }
        EpisodeSpec spec;
        spec.scene = scene;
        spec.start = start;
        spec.goal = goal;
        NavGrid grid(scene, goal);
        // Leave the policy slack: the teacher needs at most ~60% of the
        // step budget.
        const double geodesic = grid.distance_at(start);
        if (!std::isfinite(geodesic) || geodesic > 0.6 * spec.max_steps * spec.max_step_len) {
            continue;
        }
        // The teacher itself must close the episode within budget.
        const auto ref = reference_path(spec);
        const double final_gap = dist(ref.back(), goal);
        if (final_gap > spec.success_radius) {
            continue;
        }
        ManifestEntry entry;
        entry.scene_seed = scene.scene_seed;
        entry.start = start;
        entry.goal = goal;
        return entry;
    }
    return std::nullopt;
}

} // namespace

std::vector<ManifestEntry> build_split(Split split, std::size_t count) {
    // Episodes are grouped by scene (several consecutive tasks per scene),
    // mirroring benchmark structure where one environment hosts many
    // episodes; sequential evaluation can then carry scene context across
    // episode boundaries. Training favors scene diversity instead.
    const std::size_t episodes_per_scene = (split == Split::train_seen) ? 2 : 5;
    std::vector<ManifestEntry> entries;
    entries.reserve(count);
    const std::uint64_t base = split_seed_base(split);
    std::uint64_t scene_offset = 0;
    while (entries.size() < count) {
        const std::uint64_t scene_seed = base + scene_offset;
        ++scene_offset;
        if (scene_offset > count * 20 + 1000) {
            throw std::runtime_error("build_split: unable to generate enough feasible episodes");
        }
        Scene scene = generate_scene(scene_seed, split_shift(split));
        for (std::size_t sub = 0; sub < episodes_per_scene && entries.size() < count; ++sub) {
            Rng rng = Rng(scene_seed).fork(0xE715 + sub);
            auto entry = sample_episode(scene, rng);
            if (!entry) {
                break; // cramped scene; move on
            }
            entries.push_back(*entry);
        }
    }
    return entries;
}

EpisodeSpec episode_from_entry(const ManifestEntry& entry, Shift shift) {
    EpisodeSpec spec;
    spec.scene = generate_scene(entry.scene_seed, shift);
    spec.start = entry.start;
    spec.goal = entry.goal;
    return spec;
}

std::string manifest_to_json(const std::vector<ManifestEntry>& entries, Split split) {
    nlohmann::json doc;
    doc["format"] = "navmorph-manifest-v1";
    doc["split"] = split_name(split);
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& e : entries) {
        arr.push_back({{"scene_seed", e.scene_seed},
                       {"start", e.start},
                       {"goal", e.goal}});
    }
    doc["episodes"] = std::move(arr);
    return doc.dump();
}

std::pair<std::vector<ManifestEntry>, Split> manifest_from_json(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::runtime_error(std::string("manifest: ") + e.what());
    }
    if (doc.value("format", "") != "navmorph-manifest-v1") {
        throw std::runtime_error("manifest: unknown format");
    }
    const Split split = split_from_name(doc.at("split").get<std::string>());
    std::vector<ManifestEntry> entries;
    for (const auto& item : doc.at("episodes")) {
        ManifestEntry e;
        e.scene_seed = item.at("scene_seed").get<std::uint64_t>();
        e.start = item.at("start").get<Point>();
        e.goal = item.at("goal").get<Point>();
        entries.push_back(e);
    }
    return {entries, split};
}

} // namespace navmorph
