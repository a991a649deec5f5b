#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace rpft {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class FeatureKind { Image, Text };

std::string_view to_string(FeatureKind kind) noexcept;

/// Components used to build a FeatureBundle.
struct BundleParts {
  Matrix data;  // n x d, one embedding per row
  FeatureKind kind = FeatureKind::Image;
  int class_count = 0;
  std::optional<std::vector<int>> labels;
  std::vector<std::string> class_names;
  bool l2_normalized = false;
};

/// Immutable, validated matrix of embeddings with optional labels.
///
/// Invariants checked on construction:
///   - labels (when present) have one entry per row, each in [0, class_count)
///   - class_names is empty or has class_count entries
///   - kind == Text implies rows() == class_count
///   - l2_normalized implies every row norm is within 1e-5 of 1
class FeatureBundle {
 public:
  static constexpr double kUnitNormTolerance = 1e-5;

  FeatureBundle() = default;
  explicit FeatureBundle(BundleParts parts);

  const Matrix& data() const noexcept { return data_; }
  Eigen::Index rows() const noexcept { return data_.rows(); }
  Eigen::Index dim() const noexcept { return data_.cols(); }
  bool empty() const noexcept { return data_.rows() == 0; }

  FeatureKind kind() const noexcept { return kind_; }
  int class_count() const noexcept { return class_count_; }
  bool has_labels() const noexcept { return labels_.has_value(); }
  /// Throws MissingLabels when the bundle is unlabeled.
  const std::vector<int>& labels() const;
  const std::optional<std::vector<int>>& maybe_labels() const noexcept { return labels_; }
  const std::vector<std::string>& class_names() const noexcept { return class_names_; }
  bool l2_normalized() const noexcept { return l2_normalized_; }

  /// Copy the pieces back out, e.g. to build a modified bundle.
  BundleParts parts() const;

  /// Keep only the given rows, in the given order.
  FeatureBundle select_rows(std::span<const Eigen::Index> rows) const;

  friend bool operator==(const FeatureBundle& a, const FeatureBundle& b);

 private:
  Matrix data_;
  FeatureKind kind_ = FeatureKind::Image;
  int class_count_ = 0;
  std::optional<std::vector<int>> labels_;
  std::vector<std::string> class_names_;
  bool l2_normalized_ = false;
};

/// C x n indicator matrix: column i has its single 1 at row label(i).
class OneHotLabels {
 public:
  OneHotLabels() = default;
  OneHotLabels(std::vector<int> labels, int class_count);

  const Matrix& matrix() const noexcept { return matrix_; }
  const std::vector<int>& labels() const noexcept { return labels_; }
  int class_count() const noexcept { return static_cast<int>(matrix_.rows()); }
  Eigen::Index size() const noexcept { return matrix_.cols(); }
  /// Shots per class when every class has the same count, otherwise 0.
  int shots_per_class() const noexcept { return shots_per_class_; }

 private:
  Matrix matrix_;
  std::vector<int> labels_;
  int shots_per_class_ = 0;
};

struct HyperParams {
  double alpha = 1.0;        // cache / KRR mixing weight (SuS-X: Gaussian term weight)
  double beta = 5.0;         // Gaussian kernel width
  double lambda = 0.1;       // ridge penalty
  double gamma = -1.0;       // divergence sharpness
  double logit_scale = 100.0;
  double tau = 0.01;         // softmax temperature for divergence terms

  /// Throws InvalidArgument unless alpha >= 0, beta > 0, lambda >= 0, logit_scale > 0, tau > 0.
  void validate() const;
};

struct EpisodeSpec {
  int class_count = 0;
  int shots = 1;
  std::uint64_t seed = 1;
  std::string train_split = "train";
  std::string val_split = "val";
  std::string test_split = "test";
};

/// Returns a copy with unit-norm rows. Throws ZeroNormRow for rows with norm < 1e-12.
FeatureBundle l2_normalize_rows(const FeatureBundle& bundle);

OneHotLabels one_hot(std::span<const int> labels, int class_count);

/// Draws spec.shots distinct rows per class and returns them class-major.
/// Per class (ascending), the class's row indices in bundle order are shuffled
/// with Rng(spec.seed) and the first `shots` are kept; one generator is shared
/// across classes.
FeatureBundle sample_episode(const FeatureBundle& train, const EpisodeSpec& spec);

/// Index of the largest entry; ties go to the lowest index.
Eigen::Index argmax(const Eigen::Ref<const Vector>& values);

}  // namespace rpft
