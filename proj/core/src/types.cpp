#include "rpft/types.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rpft/error.hpp"
#include "rpft/rng.hpp"

namespace rpft {

std::string_view to_string(FeatureKind kind) noexcept {
  return kind == FeatureKind::Text ? "text" : "image";
}

FeatureBundle::FeatureBundle(BundleParts parts)
    : data_(std::move(parts.data)),
      kind_(parts.kind),
      class_count_(parts.class_count),
      labels_(std::move(parts.labels)),
      class_names_(std::move(parts.class_names)),
      l2_normalized_(parts.l2_normalized) {
  if (class_count_ < 0) raise(ErrorCode::InvalidBundle, "negative class_count");
  if (!class_names_.empty() && static_cast<int>(class_names_.size()) != class_count_) {
    raise(ErrorCode::InvalidBundle, "class_names has " + std::to_string(class_names_.size()) +
                                        " entries, class_count is " + std::to_string(class_count_));
  }
  if (kind_ == FeatureKind::Text && data_.rows() != class_count_) {
    raise(ErrorCode::InvalidBundle, "text bundle has " + std::to_string(data_.rows()) +
                                        " rows for " + std::to_string(class_count_) + " classes");
  }
  if (labels_) {
    if (static_cast<Eigen::Index>(labels_->size()) != data_.rows()) {
      raise(ErrorCode::InvalidBundle, "label count does not match row count");
    }
    for (std::size_t i = 0; i < labels_->size(); ++i) {
      const int y = (*labels_)[i];
      if (y < 0 || y >= class_count_) {
        raise(ErrorCode::LabelOutOfRange,
              "row " + std::to_string(i) + " has label " + std::to_string(y));
      }
    }
  }
  if (l2_normalized_) {
    for (Eigen::Index i = 0; i < data_.rows(); ++i) {
      if (std::abs(data_.row(i).norm() - 1.0) > kUnitNormTolerance) {
        raise(ErrorCode::InvalidBundle,
              "row " + std::to_string(i) + " is not unit norm but l2_normalized is set");
      }
    }
  }
}

const std::vector<int>& FeatureBundle::labels() const {
  if (!labels_) raise(ErrorCode::MissingLabels, "bundle has no labels");
  return *labels_;
}

BundleParts FeatureBundle::parts() const {
  return BundleParts{data_, kind_, class_count_, labels_, class_names_, l2_normalized_};
}

FeatureBundle FeatureBundle::select_rows(std::span<const Eigen::Index> rows) const {
  BundleParts out = parts();
  out.data.resize(static_cast<Eigen::Index>(rows.size()), data_.cols());
  std::optional<std::vector<int>> labels;
  if (labels_) labels.emplace();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Eigen::Index r = rows[i];
    if (r < 0 || r >= data_.rows()) raise(ErrorCode::InvalidArgument, "row index out of range");
    out.data.row(static_cast<Eigen::Index>(i)) = data_.row(r);
    if (labels) labels->push_back((*labels_)[static_cast<std::size_t>(r)]);
  }
  out.labels = std::move(labels);
  return FeatureBundle(std::move(out));
}

bool operator==(const FeatureBundle& a, const FeatureBundle& b) {
  return a.kind_ == b.kind_ && a.class_count_ == b.class_count_ && a.labels_ == b.labels_ &&
         a.class_names_ == b.class_names_ && a.l2_normalized_ == b.l2_normalized_ &&
         a.data_.rows() == b.data_.rows() && a.data_.cols() == b.data_.cols() &&
         a.data_ == b.data_;
}

OneHotLabels::OneHotLabels(std::vector<int> labels, int class_count)
    : matrix_(Matrix::Zero(class_count, static_cast<Eigen::Index>(labels.size()))),
      labels_(std::move(labels)) {
  if (class_count <= 0) raise(ErrorCode::InvalidArgument, "class_count must be positive");
  std::vector<int> counts(static_cast<std::size_t>(class_count), 0);
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    const int y = labels_[i];
    if (y < 0 || y >= class_count) {
      raise(ErrorCode::LabelOutOfRange,
            "index " + std::to_string(i) + " value " + std::to_string(y));
    }
    matrix_(y, static_cast<Eigen::Index>(i)) = 1.0;
    ++counts[static_cast<std::size_t>(y)];
  }
  const bool uniform =
      std::all_of(counts.begin(), counts.end(), [&](int c) { return c == counts.front(); });
  shots_per_class_ = uniform ? counts.front() : 0;
}

void HyperParams::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) raise(ErrorCode::InvalidArgument, what);
  };
  require(std::isfinite(alpha) && alpha >= 0.0, "alpha must be >= 0");
  require(std::isfinite(beta) && beta > 0.0, "beta must be > 0");
  require(std::isfinite(lambda) && lambda >= 0.0, "lambda must be >= 0");
  require(std::isfinite(gamma), "gamma must be finite");
  require(std::isfinite(logit_scale) && logit_scale > 0.0, "logit_scale must be > 0");
  require(std::isfinite(tau) && tau > 0.0, "tau must be > 0");
}

FeatureBundle l2_normalize_rows(const FeatureBundle& bundle) {
  BundleParts parts = bundle.parts();
  for (Eigen::Index i = 0; i < parts.data.rows(); ++i) {
    const double norm = parts.data.row(i).norm();
    if (!(norm >= 1e-12)) raise(ErrorCode::ZeroNormRow, "row " + std::to_string(i));
    // Already-unit rows are left untouched so normalization is idempotent.
    if (norm != 1.0) parts.data.row(i) /= norm;
  }
  parts.l2_normalized = true;
  return FeatureBundle(std::move(parts));
}

OneHotLabels one_hot(std::span<const int> labels, int class_count) {
  return OneHotLabels(std::vector<int>(labels.begin(), labels.end()), class_count);
}

FeatureBundle sample_episode(const FeatureBundle& train, const EpisodeSpec& spec) {
  if (spec.class_count <= 0 || spec.shots <= 0) {
    raise(ErrorCode::InvalidArgument, "episode needs positive class_count and shots");
  }
  const auto& labels = train.labels();
  if (train.class_count() < spec.class_count) {
    raise(ErrorCode::InvalidArgument, "train bundle has fewer classes than the episode");
  }
  std::vector<std::vector<Eigen::Index>> by_class(static_cast<std::size_t>(spec.class_count));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < spec.class_count) {
      by_class[static_cast<std::size_t>(labels[i])].push_back(static_cast<Eigen::Index>(i));
    }
  }
  Rng rng(spec.seed);
  std::vector<Eigen::Index> chosen;
  chosen.reserve(static_cast<std::size_t>(spec.class_count * spec.shots));
  for (int c = 0; c < spec.class_count; ++c) {
    auto& rows = by_class[static_cast<std::size_t>(c)];
    if (static_cast<int>(rows.size()) < spec.shots) {
      raise(ErrorCode::InsufficientShots, "class " + std::to_string(c) + " has " +
                                              std::to_string(rows.size()) + " rows, requested " +
                                              std::to_string(spec.shots));
    }
    rng.shuffle(std::span<Eigen::Index>(rows));
    chosen.insert(chosen.end(), rows.begin(), rows.begin() + spec.shots);
  }
  BundleParts parts = train.select_rows(chosen).parts();
  parts.class_count = spec.class_count;
  if (!parts.class_names.empty()) parts.class_names.resize(static_cast<std::size_t>(spec.class_count));
  return FeatureBundle(std::move(parts));
}

Eigen::Index argmax(const Eigen::Ref<const Vector>& values) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

}  // namespace rpft
