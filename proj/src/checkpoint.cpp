#include "navmorph/checkpoint.hpp"

#include <json.hpp>

#include "navmorph/io.hpp"

namespace navmorph {

using nlohmann::json;

void save_checkpoint(const ParamSet& params, const std::filesystem::path& path) {
    json doc;
    doc["format"] = "navmorph-ckpt-v1";
    json arr = json::array();
    for (const auto& p : params.items()) {
        json entry;
        entry["name"] = p.name;
        entry["shape"] = p.tensor.shape();
        entry["data"] = p.tensor.value();
        arr.push_back(std::move(entry));
    }
    doc["params"] = std::move(arr);
    atomic_write(path, doc.dump());
}

void load_checkpoint(ParamSet& params, const std::filesystem::path& path) {
    json doc;
    try {
        doc = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw std::runtime_error("checkpoint " + path.string() + ": " + e.what());
    }
    if (doc.value("format", "") != "navmorph-ckpt-v1") {
        throw std::runtime_error("checkpoint " + path.string() + ": unknown format");
    }
    const auto& arr = doc.at("params");
    if (arr.size() != params.size()) {
        throw std::runtime_error("checkpoint " + path.string() + ": parameter count mismatch");
    }
    for (const auto& entry : arr) {
        const std::string name = entry.at("name").get<std::string>();
        auto& param = params.at(name);
        const auto shape = entry.at("shape").get<std::vector<std::size_t>>();
        if (shape != param.tensor.shape()) {
            throw std::runtime_error("checkpoint " + path.string() + ": shape mismatch for '" + name + "'");
        }
        auto data = entry.at("data").get<std::vector<double>>();
        if (data.size() != param.tensor.size()) {
            throw std::runtime_error("checkpoint " + path.string() + ": data length mismatch for '" + name + "'");
        }
        param.tensor.mutable_value() = std::move(data);
    }
}

} // namespace navmorph
