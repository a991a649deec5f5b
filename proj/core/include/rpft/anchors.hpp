#pragma once

#include <string_view>
#include <vector>

#include "rpft/types.hpp"

namespace rpft {

enum class AnchorProvenance { None, LabeledShots, ExternalSupport, ClassMeans };

std::string_view to_string(AnchorProvenance p) noexcept;

/// Image anchors (class-major, labeled) and text anchors (one per class).
/// Either block may be empty; a usable set has at least one anchor.
struct AnchorSet {
  FeatureBundle image;
  FeatureBundle text;
  AnchorProvenance provenance = AnchorProvenance::None;
  /// For image anchors: source row in the input bundle of each anchor row.
  std::vector<Eigen::Index> source_rows;

  Eigen::Index image_count() const noexcept { return image.rows(); }
  Eigen::Index text_count() const noexcept { return text.rows(); }
  Eigen::Index size() const noexcept { return image.rows() + text.rows(); }
};

/// Validates kind and class count, then L2-normalizes. Throws WrongKind or CountMismatch.
AnchorSet text_anchors_from_bundle(const FeatureBundle& text, int class_count);

/// Normalized, class-major image anchors from labeled shots (stable reorder by label).
AnchorSet image_anchors_from_shots(const FeatureBundle& episode);

/// Like image_anchors_from_shots for an external support set. Every class in
/// [0, class_count) must have the same number of rows, otherwise UnbalancedSupport.
AnchorSet image_anchors_from_support(const FeatureBundle& support);

/// One anchor per class: the mean of the normalized class rows, re-normalized.
AnchorSet class_mean_anchors(const FeatureBundle& episode);

/// Image block from `image`, text block from `text`. Throws MissingAnchors if both are empty.
AnchorSet combine(const AnchorSet& image, const AnchorSet& text);

}  // namespace rpft
