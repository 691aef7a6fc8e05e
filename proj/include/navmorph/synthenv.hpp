#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "navmorph/metrics.hpp"
#include "navmorph/rng.hpp"

namespace navmorph {

// Axis-aligned obstacle. The open interior is blocked; the boundary is
// traversable.
struct Rect {
    double xmin = 0.0, ymin = 0.0, xmax = 0.0, ymax = 0.0;

    bool contains_interior(const Point& p) const {
        return p[0] > xmin && p[0] < xmax && p[1] > ymin && p[1] < ymax;
    }
};

struct Landmark {
    Point position{0.0, 0.0};
    std::vector<double> feature; // visual distractors; unused by the default observation model
};

enum class Shift { seen, unseen };

struct Scene {
    std::uint64_t scene_seed = 0;
    Shift shift = Shift::seen;
    std::vector<Landmark> landmarks;
    std::vector<Rect> obstacles;
    double noise_sigma = 0.02;

    static constexpr double arena_size = 10.0;

    bool point_free(const Point& p) const;
};

// Deterministic per (seed, shift). Seen scenes draw 2-4 obstacles with ray
// noise 0.02; unseen scenes draw 5-8 with noise 0.08. Degenerate layouts
// are regenerated with an incremented sub-seed (up to 100 attempts).
Scene generate_scene(std::uint64_t scene_seed, Shift shift);

struct EpisodeSpec {
    Scene scene;
    Point start{0.0, 0.0};
    Point goal{0.0, 0.0};
    int max_steps = 50;
    double success_radius = 0.5;
    double max_step_len = 0.25;
    std::size_t n_rays = 16;

    std::size_t obs_dim() const { return 4 + n_rays; }
};

struct StepResult {
    Point position{0.0, 0.0};
    std::vector<double> observation;
    bool done = false;
    bool reached_goal = false;
};

// Shortest-path distance field over a 0.1-resolution grid, 8-connected
// with corner-cut prevention; used by the teacher and for feasibility.
class NavGrid {
public:
    NavGrid(const Scene& scene, const Point& goal);

    static constexpr double resolution = 0.1;

    bool node_free(int ix, int iy) const;
    double distance_at(const Point& p) const; // +inf when unreachable
    std::optional<Point> nearest_free_node(const Point& p) const;
    // Grid waypoints from p toward the goal by steepest descent.
    std::vector<Point> descent_path(const Point& p, std::size_t max_nodes) const;

private:
    int side_;
    std::vector<char> free_;
    std::vector<double> dist_;
    int index(int ix, int iy) const { return iy * side_ + ix; }
};

// Mutable state of one navigation attempt. Observations consume the
// episode noise stream, so (scene seed, episode seed, action sequence)
// pins every value.
class EpisodeRuntime {
public:
    EpisodeRuntime(EpisodeSpec spec, std::uint64_t episode_seed);

    const EpisodeSpec& spec() const { return spec_; }
    const Point& position() const { return position_; }
    int steps_taken() const { return steps_; }
    bool done() const { return done_; }
    bool reached_goal() const { return reached_goal_; }

    std::vector<double> observe();

    // Clips the action to max_step_len, truncates motion at the first
    // obstacle or wall contact (no sliding), then reports the new
    // observation and termination.
    StepResult step(const Point& delta);

    // Step of length <= max_step_len along the shortest obstacle-avoiding
    // path from the current position.
    Point teacher_action() const;
    Point teacher_action_at(const Point& p) const;

    const NavGrid& grid() const { return grid_; }

private:
    EpisodeSpec spec_;
    Point position_;
    int steps_ = 0;
    bool done_ = false;
    bool reached_goal_ = false;
    Rng noise_rng_;
    NavGrid grid_;
};

// Collision-truncated displacement for a proposed segment; also used by
// the ray caster.
double free_travel_fraction(const Scene& scene, const Point& from, const Point& delta);
bool segment_free(const Scene& scene, const Point& a, const Point& b);
double ray_distance(const Scene& scene, const Point& origin, double angle);

struct ManifestEntry {
    std::uint64_t scene_seed = 0;
    Point start{0.0, 0.0};
    Point goal{0.0, 0.0};
};

enum class Split { train_seen, val_seen, val_unseen };

Split split_from_name(const std::string& name);
std::string split_name(Split s);
Shift split_shift(Split s);

// Deterministic pure function of (split, count): episode geometry does not
// depend on the run seed. Every entry is validated feasible (grid-reachable
// goal, teacher rollout succeeds within the step budget).
std::vector<ManifestEntry> build_split(Split split, std::size_t count);

EpisodeSpec episode_from_entry(const ManifestEntry& entry, Shift shift);

// Teacher rollout from the episode start; the reference path for metrics.
std::vector<Point> reference_path(const EpisodeSpec& spec);
double path_length(const std::vector<Point>& path);

std::string manifest_to_json(const std::vector<ManifestEntry>& entries, Split split);
std::pair<std::vector<ManifestEntry>, Split> manifest_from_json(const std::string& text);

} // namespace navmorph
