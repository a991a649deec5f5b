#pragma once

#include <memory>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "rpft/types.hpp"

namespace rpft {

using VectorRef = Eigen::Ref<const Vector>;

class KernelSpec;

struct LinearKernel {};

/// Sum of per-block dot products. The row is split into contiguous blocks of
/// `block_dims` (or equal blocks when block_dims is empty).
struct WeightedLinearKernel {
  std::vector<double> weights;
  std::vector<Eigen::Index> block_dims;
};

enum class GaussianForm {
  Distance,  // exp(-beta * |x - a|^2 / 2)
  Affinity,  // exp(-beta * (1 - x.a)); identical on unit-norm rows
};

struct GaussianKernel {
  double beta = 5.0;
  GaussianForm form = GaussianForm::Distance;
};

/// alpha_mix * k_gau + gamma * phi(-KL(p_x || p_a)), p_v = softmax(W v / tau).
/// phi maps the -KL values of one query against all its anchors affinely onto
/// the [min, max] range of the Gaussian values of the same query.
struct CalibratedGaussianKernel {
  double alpha_mix = 1.0;
  double gamma = 1.0;
  double tau = 0.01;
  double beta = 5.0;
  GaussianForm form = GaussianForm::Distance;
  std::shared_ptr<const Matrix> text_anchors;  // C x d, row c = class c
};

struct CompositeKernel {
  std::vector<double> weights;
  std::vector<KernelSpec> kernels;
};

class KernelSpec {
 public:
  using Variant = std::variant<LinearKernel, WeightedLinearKernel, GaussianKernel,
                               CalibratedGaussianKernel, CompositeKernel>;

  KernelSpec() : variant_(LinearKernel{}) {}
  KernelSpec(Variant v) : variant_(std::move(v)) {}  // NOLINT(google-explicit-constructor)

  static KernelSpec linear() { return KernelSpec(LinearKernel{}); }
  static KernelSpec gaussian(double beta, GaussianForm form = GaussianForm::Distance) {
    return KernelSpec(GaussianKernel{beta, form});
  }

  const Variant& variant() const noexcept { return variant_; }
  template <typename T>
  const T* get_if() const noexcept {
    return std::get_if<T>(&variant_);
  }

  /// Throws InvalidArgument / EmptyComposite / MissingTextAnchors on bad parameters.
  void validate() const;

 private:
  Variant variant_;
};

// Scalar kernels.
double k_linear(const VectorRef& x, const VectorRef& a);
double k_gaussian(const VectorRef& x, const VectorRef& a, double beta);
double k_gaussian_affinity(const VectorRef& x, const VectorRef& a, double beta);
double k_weighted_linear(std::span<const Vector> x_blocks, std::span<const Vector> a_blocks,
                         std::span<const double> weights);

/// Value range used by the calibrated kernel's rescaling of -KL.
struct CalibrationRange {
  double affinity_min = 0.0;
  double affinity_max = 1.0;
  double neg_kl_min = 0.0;
  double neg_kl_max = 0.0;

  /// Affine map of [neg_kl_min, neg_kl_max] onto [affinity_min, affinity_max];
  /// a constant -KL block maps to the affinity midpoint.
  double rescale(double neg_kl) const;
};

/// Row-wise softmax of W v / tau.
Vector class_probabilities(const VectorRef& v, const Matrix& text_anchors, double tau);
/// KL(p || q) with both floored at 1e-12 before the log.
double kl_divergence(const VectorRef& p, const VectorRef& q);

/// Pairwise calibrated kernel using hp.alpha, hp.gamma, hp.tau, hp.beta. Without an
/// explicit range the pair forms its own one-element block.
double k_calibrated_gaussian(const VectorRef& x, const VectorRef& a,
                             const FeatureBundle& text_anchors, const HyperParams& hp,
                             const std::optional<CalibrationRange>& range = std::nullopt);

/// k(x, a) for any spec. Calibrated specs treat (x, a) as a one-element block.
double evaluate(const KernelSpec& spec, const VectorRef& x, const VectorRef& a);
/// Weighted sum of sub-kernels. Throws EmptyComposite for an empty term list.
double composite_kernel(const VectorRef& x, const VectorRef& a, const CompositeKernel& spec);

/// [k(x, A_0), ..., k(x, A_{n-1})] against every row of `anchors`.
Vector kernel_row(const KernelSpec& spec, const VectorRef& x, const Matrix& anchors);

/// Stacked kernel features: image-anchor block first, then text-anchor block.
struct KernelVector {
  Vector values;
  Eigen::Index image_count = 0;

  Eigen::Index size() const noexcept { return values.size(); }
  Eigen::Index text_count() const noexcept { return values.size() - image_count; }
  auto image_block() const { return values.head(image_count); }
  auto text_block() const { return values.tail(text_count()); }
};

KernelVector kernel_vector(const VectorRef& x, const FeatureBundle& image_anchors,
                           const FeatureBundle& text_anchors, const KernelSpec& spec_im,
                           const KernelSpec& spec_txt);

struct KernelMatrix {
  Matrix values;
  Eigen::Index size() const noexcept { return values.rows(); }
};

/// Symmetric Gram matrix over the rows of `anchors`. Calibrated kernels are
/// rejected with UnsupportedKernel because their per-query rescaling is not symmetric.
KernelMatrix gram_matrix(const Matrix& anchors, const KernelSpec& spec);
KernelMatrix gram_matrix(const FeatureBundle& anchors, const KernelSpec& spec);

}  // namespace rpft
