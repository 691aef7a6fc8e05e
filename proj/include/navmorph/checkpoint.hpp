#pragma once

#include <filesystem>

#include "navmorph/layers.hpp"

namespace navmorph {

// Single-document JSON checkpoint:
//   {"format":"navmorph-ckpt-v1","params":[{"name":...,"shape":[...],"data":[...]}]}
void save_checkpoint(const ParamSet& params, const std::filesystem::path& path);

// Fills an existing ParamSet in place; the set must contain exactly the
// checkpointed names with matching shapes.
void load_checkpoint(ParamSet& params, const std::filesystem::path& path);

} // namespace navmorph
