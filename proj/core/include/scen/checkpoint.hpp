#pragma once

#include <filesystem>
#include <optional>

#include "scen/model.hpp"
#include "scen/stm.hpp"

namespace scen {

struct Checkpoint {
    ScenParams scen;
    std::optional<StmParams> stm;
};

/// Little-endian binary container: magic "SCENCKPT", u32 version, the
/// architecture dims, then every parameter tensor as raw f64 in a fixed
/// order (fc, e_s, e_o, c_a, c_o, then g and d when present; weight before
/// bias, layer by layer). Round-trips are bit-exact.
void save_checkpoint(const std::filesystem::path& path, const ScenParams& scen,
                     const StmParams* stm);

Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace scen
