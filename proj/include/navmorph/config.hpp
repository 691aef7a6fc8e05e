#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "navmorph/harness.hpp"

namespace navmorph {

// Full run description: every TrainConfig knob plus file locations.
// Populated from built-in defaults, then a key=value config file, then CLI
// overrides (highest precedence). NAVMORPH_SEED beats the file's seed.
struct RunConfig {
    TrainConfig train;
    std::string split = "val_unseen";
    bool self_evolve = true;
    std::string checkpoint;
    std::string cem;
    std::string manifest;
    std::string output_dir = "runs/out";
};

struct ConfigKeyDoc {
    std::string key;
    std::string doc;
};

// One entry per accepted key; drives both parsing and --help.
const std::vector<ConfigKeyDoc>& config_key_docs();

// Applies "key=value"; unknown keys raise ConfigError.
void apply_config_value(RunConfig& cfg, const std::string& key, const std::string& value);

// UTF-8 key=value file with '#' comments and blank lines.
void load_config_file(RunConfig& cfg, const std::filesystem::path& path);

} // namespace navmorph
