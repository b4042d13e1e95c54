#pragma once

#include <filesystem>

#include "scen/dataset.hpp"

namespace scen {

/// Metadata: UTF-8 text with [states], [objects], [pairs], [images] sections.
/// Features: little-endian binary, magic "SCENFEAT", u32 version=1,
/// u32 n_rows, u32 dim, then n_rows*dim float32 values row-major.
/// Loading converts features to 64-bit; saving writes them back as float32,
/// so a save -> load round trip is bit-exact for float32-valued bundles
/// (everything this project produces).
void save_bundle(const DatasetBundle& bundle, const std::filesystem::path& metadata_path,
                 const std::filesystem::path& features_path);

DatasetBundle load_bundle(const std::filesystem::path& metadata_path,
                          const std::filesystem::path& features_path);

}  // namespace scen
