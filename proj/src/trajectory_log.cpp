#include "navmorph/trajectory_log.hpp"

#include <sstream>

#include <json.hpp>

namespace navmorph {

using nlohmann::json;

std::string trajectory_to_jsonl(const std::vector<TrajectoryRecord>& records) {
    std::ostringstream out;
    for (const auto& r : records) {
        json line;
        line["episode_id"] = r.episode_id;
        line["scene_seed"] = r.scene_seed;
        line["step"] = r.step;
        line["position"] = r.position;
        line["action"] = r.action;
        if (r.teacher_action) {
            line["teacher_action"] = *r.teacher_action;
        } else {
            line["teacher_action"] = nullptr;
        }
        line["done"] = r.done;
        out << line.dump() << '\n';
    }
    return out.str();
}

std::vector<TrajectoryRecord> trajectory_from_jsonl(const std::string& text) {
    std::vector<TrajectoryRecord> records;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) {
            continue;
        }
        json doc;
        try {
            doc = json::parse(line);
        } catch (const json::parse_error& e) {
            throw std::runtime_error("trajectory log line " + std::to_string(lineno) + ": " + e.what());
        }
        TrajectoryRecord r;
        r.episode_id = doc.at("episode_id").get<std::string>();
        r.scene_seed = doc.at("scene_seed").get<std::uint64_t>();
        r.step = doc.at("step").get<int>();
        r.position = doc.at("position").get<Point>();
        r.action = doc.at("action").get<Point>();
        if (!doc.at("teacher_action").is_null()) {
            r.teacher_action = doc.at("teacher_action").get<Point>();
        }
        r.done = doc.at("done").get<bool>();
        records.push_back(std::move(r));
    }
    return records;
}

namespace {

void append_row(std::ostringstream& out, const std::string& id, const MetricReport& r) {
    out << id << ',' << r.tl << ',' << r.ne << ',' << r.sr << ',' << r.osr << ','
        << r.spl << ',' << r.ndtw << ',' << r.sdtw << '\n';
}

} // namespace

std::string metrics_to_csv(const std::vector<std::string>& episode_ids,
                           const std::vector<MetricReport>& reports) {
    if (episode_ids.size() != reports.size()) {
        throw std::invalid_argument("metrics_to_csv: id/report count mismatch");
    }
    std::ostringstream out;
    out.precision(17);
    out << "episode_id,tl,ne,sr,osr,spl,ndtw,sdtw\n";
    for (std::size_t i = 0; i < reports.size(); ++i) {
        append_row(out, episode_ids[i], reports[i]);
    }
    if (!reports.empty()) {
        append_row(out, "aggregate", aggregate(reports));
    }
    return out.str();
}

} // namespace navmorph
