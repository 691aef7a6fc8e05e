#include "navmorph/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "navmorph/io.hpp"

namespace navmorph {

namespace {

int parse_int(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const int v = std::stoi(value, &used);
        if (used != value.size()) {
            throw std::invalid_argument("trailing characters");
        }
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': expected integer, got '" + value + "'");
    }
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size()) {
            throw std::invalid_argument("trailing characters");
        }
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': expected number, got '" + value + "'");
    }
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "yes") {
        return true;
    }
    if (value == "false" || value == "0" || value == "no") {
        return false;
    }
    throw ConfigError("config key '" + key + "': expected boolean, got '" + value + "'");
}

struct KeyHandler {
    std::string doc;
    std::function<void(RunConfig&, const std::string&, const std::string&)> apply;
};

const std::vector<std::pair<std::string, KeyHandler>>& key_table() {
    static const std::vector<std::pair<std::string, KeyHandler>> table = {
        {"episodes", {"training episodes (one optimizer step each)",
                      [](RunConfig& c, const std::string& k, const std::string& v) { c.train.episodes = parse_int(k, v); }}},
        {"t_p", {"foresight horizon in steps",
                 [](RunConfig& c, const std::string& k, const std::string& v) { c.train.t_p = parse_int(k, v); }}},
        {"gamma", {"weight of the divergence term in the objective",
                   [](RunConfig& c, const std::string& k, const std::string& v) { c.train.gamma = parse_double(k, v); }}},
        {"alpha", {"memory enhancement blend factor in [0,1]",
                   [](RunConfig& c, const std::string& k, const std::string& v) { c.train.alpha = parse_double(k, v); }}},
        {"beta", {"memory forward-update factor in [0,1]",
                  [](RunConfig& c, const std::string& k, const std::string& v) { c.train.beta = parse_double(k, v); }}},
        {"k", {"memory retrieval fan-in (clamped to n_m)",
               [](RunConfig& c, const std::string& k, const std::string& v) { c.train.k = parse_int(k, v); }}},
        {"n_m", {"memory bank capacity",
                 [](RunConfig& c, const std::string& k, const std::string& v) { c.train.n_m = parse_int(k, v); }}},
        {"seed", {"master seed (NAVMORPH_SEED env overrides the file value)",
                  [](RunConfig& c, const std::string& k, const std::string& v) {
                      c.train.seed = static_cast<std::uint64_t>(parse_int(k, v));
                  }}},
        {"eval_every", {"mid-training probe interval in episodes; 0 disables",
                        [](RunConfig& c, const std::string& k, const std::string& v) { c.train.eval_every = parse_int(k, v); }}},
        {"dagger_mix", {"initial probability of executing the teacher action",
                        [](RunConfig& c, const std::string& k, const std::string& v) { c.train.dagger_mix = parse_double(k, v); }}},
        {"dagger_mix_final", {"teacher-execution probability at the final episode",
                              [](RunConfig& c, const std::string& k, const std::string& v) { c.train.dagger_mix_final = parse_double(k, v); }}},
        {"lr", {"optimizer learning rate",
                [](RunConfig& c, const std::string& k, const std::string& v) { c.train.lr = parse_double(k, v); }}},
        {"l2_weight", {"weight of the squared action error",
                       [](RunConfig& c, const std::string& k, const std::string& v) { c.train.l2_weight = parse_double(k, v); }}},
        {"ndtw_scale", {"distance scale of the warping regularizer",
                        [](RunConfig& c, const std::string& k, const std::string& v) { c.train.ndtw_scale = parse_double(k, v); }}},
        {"literal_horizon_norm", {"normalize the warping sum by the horizon only",
                                  [](RunConfig& c, const std::string& k, const std::string& v) { c.train.literal_horizon_norm = parse_bool(k, v); }}},
        {"proximity_weight", {"imagined-path proximity weight in action selection",
                              [](RunConfig& c, const std::string& k, const std::string& v) { c.train.proximity_weight = parse_double(k, v); }}},
        {"candidate_sigma", {"std-dev of candidate perturbations at test time",
                             [](RunConfig& c, const std::string& k, const std::string& v) { c.train.candidate_sigma = parse_double(k, v); }}},
        {"candidate_count", {"number of action candidates (mean + perturbations)",
                             [](RunConfig& c, const std::string& k, const std::string& v) { c.train.candidate_count = parse_int(k, v); }}},
        {"eval_episodes", {"episodes per evaluation split",
                           [](RunConfig& c, const std::string& k, const std::string& v) { c.train.eval_episodes = parse_int(k, v); }}},
        {"d_x", {"visual embedding dimension",
                 [](RunConfig& c, const std::string& k, const std::string& v) { c.train.model.d_x = static_cast<std::size_t>(parse_int(k, v)); }}},
        {"d_h", {"deterministic state dimension",
                 [](RunConfig& c, const std::string& k, const std::string& v) { c.train.model.d_h = static_cast<std::size_t>(parse_int(k, v)); }}},
        {"d_s", {"stochastic state dimension",
                 [](RunConfig& c, const std::string& k, const std::string& v) { c.train.model.d_s = static_cast<std::size_t>(parse_int(k, v)); }}},
        {"d_a", {"action embedding dimension",
                 [](RunConfig& c, const std::string& k, const std::string& v) { c.train.model.d_a = static_cast<std::size_t>(parse_int(k, v)); }}},
        {"hidden", {"hidden width of the feed-forward heads",
                    [](RunConfig& c, const std::string& k, const std::string& v) { c.train.model.hidden = static_cast<std::size_t>(parse_int(k, v)); }}},
        {"n_rays", {"ray sensors per observation (d_obs = 4 + n_rays)",
                    [](RunConfig& c, const std::string& k, const std::string& v) {
                        c.train.model.d_obs = 4 + static_cast<std::size_t>(parse_int(k, v));
                    }}},
        {"sigma_floor", {"lower bound of predicted standard deviations",
                         [](RunConfig& c, const std::string& k, const std::string& v) { c.train.model.sigma_floor = parse_double(k, v); }}},
        {"split", {"episode split: train_seen, val_seen, or val_unseen",
                   [](RunConfig& c, const std::string&, const std::string& v) { c.split = v; }}},
        {"self_evolve", {"update the memory bank during evaluation",
                         [](RunConfig& c, const std::string& k, const std::string& v) { c.self_evolve = parse_bool(k, v); }}},
        {"checkpoint", {"model checkpoint path",
                        [](RunConfig& c, const std::string&, const std::string& v) { c.checkpoint = v; }}},
        {"cem", {"memory snapshot path",
                 [](RunConfig& c, const std::string&, const std::string& v) { c.cem = v; }}},
        {"manifest", {"episode manifest path (optional)",
                      [](RunConfig& c, const std::string&, const std::string& v) { c.manifest = v; }}},
        {"output_dir", {"run output directory (locked while in use)",
                        [](RunConfig& c, const std::string&, const std::string& v) { c.output_dir = v; }}},
    };
    return table;
}

} // namespace

const std::vector<ConfigKeyDoc>& config_key_docs() {
    static const std::vector<ConfigKeyDoc> docs = [] {
        std::vector<ConfigKeyDoc> out;
        for (const auto& [key, handler] : key_table()) {
            out.push_back({key, handler.doc});
        }
        return out;
    }();
    return docs;
}

void apply_config_value(RunConfig& cfg, const std::string& key, const std::string& value) {
    for (const auto& [name, handler] : key_table()) {
        if (name == key) {
            handler.apply(cfg, key, value);
            return;
        }
    }
    throw ConfigError("unknown config key '" + key + "'");
}

void load_config_file(RunConfig& cfg, const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("config file not found: " + path.string());
    }
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) {
            line = line.substr(0, hash);
        }
        // trim
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) {
            continue;
        }
        const auto last = line.find_last_not_of(" \t\r");
        line = line.substr(first, last - first + 1);
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected key=value");
        }
        std::string key = line.substr(0, eq);
        std::string value = line.substr(eq + 1);
        const auto key_end = key.find_last_not_of(" \t");
        key = key.substr(0, key_end == std::string::npos ? 0 : key_end + 1);
        const auto val_start = value.find_first_not_of(" \t");
        value = (val_start == std::string::npos) ? "" : value.substr(val_start);
        apply_config_value(cfg, key, value);
    }
}

} // namespace navmorph
