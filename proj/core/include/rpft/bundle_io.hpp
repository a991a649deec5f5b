#pragma once

#include <cstdint>
#include <filesystem>

#include "rpft/types.hpp"

namespace rpft {

// Feature bundle directory layout (little-endian):
//   meta.json    {"format":"rpft","version":1,"kind":"image"|"text","n":..,"d":..,
//                 "dtype":"f32","l2_normalized":..,"class_count":..,
//                 "class_names":[..] (optional),"has_labels":..}
//   features.bin n*d IEEE-754 binary32, row-major, no header
//   labels.bin   n int32 (only when has_labels)

inline constexpr int kBundleFormatVersion = 1;

struct LoadedBundle {
  FeatureBundle bundle;
  std::uint32_t features_crc32 = 0;
  std::uint32_t labels_crc32 = 0;  // 0 when there is no labels.bin
};

/// Unknown meta.json keys are ignored. Throws BadMagic, BadVersion, ShapeMismatch,
/// CorruptLabels or IoFailure.
LoadedBundle load_bundle_with_checksums(const std::filesystem::path& dir);
FeatureBundle load_bundle(const std::filesystem::path& dir);

/// Values are narrowed to binary32. Throws EmptyBundle for n = 0, AlreadyExists when
/// the directory already holds a bundle and `force` is false, IoFailure otherwise.
void save_bundle(const FeatureBundle& bundle, const std::filesystem::path& dir,
                 bool force = false);

}  // namespace rpft
