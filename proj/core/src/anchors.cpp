#include "rpft/anchors.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "rpft/error.hpp"

namespace rpft {
namespace {

const std::vector<int>& require_labels(const FeatureBundle& bundle) {
  if (!bundle.has_labels()) raise(ErrorCode::MissingLabels, "image anchors need labeled rows");
  return bundle.labels();
}

AnchorSet class_major(const FeatureBundle& bundle, AnchorProvenance provenance) {
  const auto& labels = require_labels(bundle);
  std::vector<Eigen::Index> order(labels.size());
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return labels[static_cast<std::size_t>(a)] < labels[static_cast<std::size_t>(b)];
  });
  AnchorSet out;
  out.image = l2_normalize_rows(bundle.select_rows(order));
  out.provenance = provenance;
  out.source_rows = std::move(order);
  return out;
}

}  // namespace

std::string_view to_string(AnchorProvenance p) noexcept {
  switch (p) {
    case AnchorProvenance::None: return "none";
    case AnchorProvenance::LabeledShots: return "labeled-shots";
    case AnchorProvenance::ExternalSupport: return "external-support";
    case AnchorProvenance::ClassMeans: return "class-means";
  }
  return "none";
}

AnchorSet text_anchors_from_bundle(const FeatureBundle& text, int class_count) {
  if (text.kind() != FeatureKind::Text) raise(ErrorCode::WrongKind, "expected a text bundle");
  if (text.rows() != class_count) {
    raise(ErrorCode::CountMismatch, "text bundle has " + std::to_string(text.rows()) +
                                        " rows, expected " + std::to_string(class_count));
  }
  AnchorSet out;
  out.text = l2_normalize_rows(text);
  return out;
}

AnchorSet image_anchors_from_shots(const FeatureBundle& episode) {
  return class_major(episode, AnchorProvenance::LabeledShots);
}

AnchorSet image_anchors_from_support(const FeatureBundle& support) {
  const auto& labels = require_labels(support);
  std::vector<int> counts(static_cast<std::size_t>(support.class_count()), 0);
  for (int y : labels) ++counts[static_cast<std::size_t>(y)];
  if (!counts.empty()) {
    const auto [lo, hi] = std::minmax_element(counts.begin(), counts.end());
    if (*lo != *hi || *lo == 0) {
      raise(ErrorCode::UnbalancedSupport, "per-class support counts range from " +
                                              std::to_string(*lo) + " to " + std::to_string(*hi));
    }
  }
  return class_major(support, AnchorProvenance::ExternalSupport);
}

AnchorSet class_mean_anchors(const FeatureBundle& episode) {
  const auto& labels = require_labels(episode);
  const FeatureBundle normalized = l2_normalize_rows(episode);
  const int C = episode.class_count();
  Matrix sums = Matrix::Zero(C, episode.dim());
  std::vector<int> counts(static_cast<std::size_t>(C), 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    sums.row(labels[i]) += normalized.data().row(static_cast<Eigen::Index>(i));
    ++counts[static_cast<std::size_t>(labels[i])];
  }
  for (int c = 0; c < C; ++c) {
    if (counts[static_cast<std::size_t>(c)] == 0) {
      raise(ErrorCode::EmptyClass, "class " + std::to_string(c) + " has no rows");
    }
    sums.row(c) /= counts[static_cast<std::size_t>(c)];
  }
  std::vector<int> class_labels(static_cast<std::size_t>(C));
  std::iota(class_labels.begin(), class_labels.end(), 0);
  AnchorSet out;
  out.image = l2_normalize_rows(FeatureBundle(BundleParts{
      std::move(sums), FeatureKind::Image, C, std::move(class_labels), episode.class_names(), false}));
  out.provenance = AnchorProvenance::ClassMeans;
  return out;
}

AnchorSet combine(const AnchorSet& image, const AnchorSet& text) {
  if (image.image.empty() && text.text.empty()) {
    raise(ErrorCode::MissingAnchors, "anchor set would be empty");
  }
  if (!image.image.empty() && !text.text.empty() && image.image.dim() != text.text.dim()) {
    raise(ErrorCode::DimensionMismatch, "image and text anchors differ in dimension");
  }
  AnchorSet out;
  out.image = image.image;
  out.text = text.text;
  out.provenance = image.image.empty() ? AnchorProvenance::None : image.provenance;
  out.source_rows = image.source_rows;
  return out;
}

}  // namespace rpft
