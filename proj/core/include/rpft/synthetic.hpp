#pragma once

#include <cstdint>

#include "rpft/types.hpp"

namespace rpft {

/// Desk-scale clustered embeddings on the unit sphere.
///
/// Class centers are normalized standard-normal draws. A sample of class c is
/// normalize(center_c + e / concentration) with e ~ N(0, I_d / d), so |e| is
/// about 1 regardless of d. The text bundle rows are the centers. Centers and
/// the three splits use independent substreams mix_seed(seed, 0..3).
struct SyntheticSpec {
  int classes = 10;
  int dim = 64;
  int train_per_class = 16;
  int val_per_class = 16;
  int test_per_class = 50;
  double concentration = 0.25;
  std::uint64_t seed = 1;

  void validate() const;
};

struct SyntheticData {
  FeatureBundle train;
  FeatureBundle val;
  FeatureBundle test;
  FeatureBundle text;
};

SyntheticData gen_synthetic(const SyntheticSpec& spec);

}  // namespace rpft
