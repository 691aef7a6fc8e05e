#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "navmorph/metrics.hpp"

namespace navmorph {

// One line of the JSONL trajectory log.
struct TrajectoryRecord {
    std::string episode_id;
    std::uint64_t scene_seed = 0;
    int step = 0;
    Point position{0.0, 0.0};
    Point action{0.0, 0.0};
    std::optional<Point> teacher_action;
    bool done = false;
};

std::string trajectory_to_jsonl(const std::vector<TrajectoryRecord>& records);
std::vector<TrajectoryRecord> trajectory_from_jsonl(const std::string& text);

// Per-episode rows plus a final "aggregate" row.
std::string metrics_to_csv(const std::vector<std::string>& episode_ids,
                           const std::vector<MetricReport>& reports);

} // namespace navmorph
