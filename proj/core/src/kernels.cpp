#include "rpft/kernels.hpp"

#include <cmath>
#include <string>

#include "rpft/error.hpp"

namespace rpft {
namespace {

constexpr double kProbabilityFloor = 1e-12;

void require_same_dim(const VectorRef& x, const VectorRef& a) {
  if (x.size() != a.size()) {
    raise(ErrorCode::DimensionMismatch,
          "vector sizes " + std::to_string(x.size()) + " and " + std::to_string(a.size()));
  }
}

std::vector<Eigen::Index> resolve_blocks(const WeightedLinearKernel& spec, Eigen::Index dim) {
  if (spec.weights.empty()) raise(ErrorCode::BlockCountMismatch, "no block weights");
  if (!spec.block_dims.empty()) {
    if (spec.block_dims.size() != spec.weights.size()) {
      raise(ErrorCode::BlockCountMismatch, "weights and block_dims differ in length");
    }
    Eigen::Index total = 0;
    for (auto b : spec.block_dims) total += b;
    if (total != dim) raise(ErrorCode::DimensionMismatch, "block_dims do not sum to the row size");
    return spec.block_dims;
  }
  const auto blocks = static_cast<Eigen::Index>(spec.weights.size());
  if (dim % blocks != 0) {
    raise(ErrorCode::BlockCountMismatch, "row size is not divisible by the block count");
  }
  return std::vector<Eigen::Index>(spec.weights.size(), dim / blocks);
}

double weighted_linear_rows(const VectorRef& x, const VectorRef& a,
                            const WeightedLinearKernel& spec) {
  require_same_dim(x, a);
  const auto blocks = resolve_blocks(spec, x.size());
  double sum = 0.0;
  Eigen::Index offset = 0;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    sum += spec.weights[b] * x.segment(offset, blocks[b]).dot(a.segment(offset, blocks[b]));
    offset += blocks[b];
  }
  return sum;
}

double gaussian_value(const VectorRef& x, const VectorRef& a, double beta, GaussianForm form) {
  return form == GaussianForm::Distance ? k_gaussian(x, a, beta) : k_gaussian_affinity(x, a, beta);
}

Vector calibrated_row(const CalibratedGaussianKernel& spec, const VectorRef& x,
                      const Matrix& anchors) {
  if (!spec.text_anchors || spec.text_anchors->rows() == 0) {
    raise(ErrorCode::MissingTextAnchors, "calibrated kernel needs text anchors");
  }
  const Matrix& text = *spec.text_anchors;
  if (text.cols() != x.size() || anchors.cols() != x.size()) {
    raise(ErrorCode::DimensionMismatch, "calibrated kernel operands differ in dimension");
  }
  const Eigen::Index n = anchors.rows();
  const Matrix columns = anchors.transpose();
  Vector affinity(n);
  Vector neg_kl(n);
  const Vector p_x = class_probabilities(x, text, spec.tau);
  for (Eigen::Index i = 0; i < n; ++i) {
    affinity[i] = gaussian_value(x, columns.col(i), spec.beta, spec.form);
    neg_kl[i] = -kl_divergence(p_x, class_probabilities(columns.col(i), text, spec.tau));
  }
  if (n == 0) return affinity;
  const CalibrationRange range{affinity.minCoeff(), affinity.maxCoeff(), neg_kl.minCoeff(),
                               neg_kl.maxCoeff()};
  Vector out(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out[i] = spec.alpha_mix * affinity[i] + spec.gamma * range.rescale(neg_kl[i]);
  }
  return out;
}

}  // namespace

void KernelSpec::validate() const {
  std::visit(
      [](const auto& k) {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, GaussianKernel>) {
          if (!(k.beta > 0.0)) raise(ErrorCode::InvalidArgument, "Gaussian beta must be > 0");
        } else if constexpr (std::is_same_v<T, WeightedLinearKernel>) {
          if (k.weights.empty()) raise(ErrorCode::BlockCountMismatch, "no block weights");
          if (!k.block_dims.empty() && k.block_dims.size() != k.weights.size()) {
            raise(ErrorCode::BlockCountMismatch, "weights and block_dims differ in length");
          }
        } else if constexpr (std::is_same_v<T, CalibratedGaussianKernel>) {
          if (!(k.beta > 0.0)) raise(ErrorCode::InvalidArgument, "calibrated beta must be > 0");
          if (!(k.tau > 0.0)) raise(ErrorCode::InvalidArgument, "calibrated tau must be > 0");
          if (!k.text_anchors || k.text_anchors->rows() == 0) {
            raise(ErrorCode::MissingTextAnchors, "calibrated kernel needs text anchors");
          }
        } else if constexpr (std::is_same_v<T, CompositeKernel>) {
          if (k.kernels.empty()) raise(ErrorCode::EmptyComposite, "composite has no terms");
          if (k.weights.size() != k.kernels.size()) {
            raise(ErrorCode::InvalidArgument, "composite weights and kernels differ in length");
          }
          bool any_positive = false;
          for (double w : k.weights) {
            if (!(w >= 0.0)) raise(ErrorCode::InvalidArgument, "composite weights must be >= 0");
            any_positive = any_positive || w > 0.0;
          }
          if (!any_positive) raise(ErrorCode::InvalidArgument, "composite needs a positive weight");
          for (const auto& sub : k.kernels) sub.validate();
        }
      },
      variant_);
}

double k_linear(const VectorRef& x, const VectorRef& a) {
  require_same_dim(x, a);
  return x.dot(a);
}

double k_gaussian(const VectorRef& x, const VectorRef& a, double beta) {
  require_same_dim(x, a);
  return std::exp(-beta * (x - a).squaredNorm() / 2.0);
}

double k_gaussian_affinity(const VectorRef& x, const VectorRef& a, double beta) {
  require_same_dim(x, a);
  return std::exp(-beta * (1.0 - x.dot(a)));
}

double k_weighted_linear(std::span<const Vector> x_blocks, std::span<const Vector> a_blocks,
                         std::span<const double> weights) {
  if (x_blocks.size() != a_blocks.size() || x_blocks.size() != weights.size()) {
    raise(ErrorCode::BlockCountMismatch, "block counts " + std::to_string(x_blocks.size()) + ", " +
                                             std::to_string(a_blocks.size()) + ", " +
                                             std::to_string(weights.size()));
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    sum += weights[i] * k_linear(x_blocks[i], a_blocks[i]);
  }
  return sum;
}

double CalibrationRange::rescale(double neg_kl) const {
  const double span = neg_kl_max - neg_kl_min;
  if (!(span > 0.0)) return 0.5 * (affinity_min + affinity_max);
  return affinity_min + (neg_kl - neg_kl_min) / span * (affinity_max - affinity_min);
}

Vector class_probabilities(const VectorRef& v, const Matrix& text_anchors, double tau) {
  if (text_anchors.cols() != v.size()) {
    raise(ErrorCode::DimensionMismatch, "text anchors and vector differ in dimension");
  }
  Vector logits = (text_anchors * v) / tau;
  logits.array() -= logits.maxCoeff();
  Vector p = logits.array().exp();
  return p / p.sum();
}

double kl_divergence(const VectorRef& p, const VectorRef& q) {
  require_same_dim(p, q);
  double kl = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const double pi = std::max(p[i], kProbabilityFloor);
    const double qi = std::max(q[i], kProbabilityFloor);
    kl += pi * (std::log(pi) - std::log(qi));
  }
  return kl;
}

double k_calibrated_gaussian(const VectorRef& x, const VectorRef& a,
                             const FeatureBundle& text_anchors, const HyperParams& hp,
                             const std::optional<CalibrationRange>& range) {
  if (text_anchors.empty() || text_anchors.kind() != FeatureKind::Text) {
    raise(ErrorCode::MissingTextAnchors, "calibrated kernel needs a text bundle");
  }
  require_same_dim(x, a);
  const Matrix& text = text_anchors.data();
  const double affinity = k_gaussian(x, a, hp.beta);
  const double neg_kl = -kl_divergence(class_probabilities(x, text, hp.tau),
                                       class_probabilities(a, text, hp.tau));
  const CalibrationRange r = range.value_or(CalibrationRange{affinity, affinity, neg_kl, neg_kl});
  return hp.alpha * affinity + hp.gamma * r.rescale(neg_kl);
}

double composite_kernel(const VectorRef& x, const VectorRef& a, const CompositeKernel& spec) {
  if (spec.kernels.empty()) raise(ErrorCode::EmptyComposite, "composite has no terms");
  if (spec.weights.size() != spec.kernels.size()) {
    raise(ErrorCode::InvalidArgument, "composite weights and kernels differ in length");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < spec.kernels.size(); ++i) {
    sum += spec.weights[i] * evaluate(spec.kernels[i], x, a);
  }
  return sum;
}

double evaluate(const KernelSpec& spec, const VectorRef& x, const VectorRef& a) {
  return std::visit(
      [&](const auto& k) -> double {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, LinearKernel>) {
          return k_linear(x, a);
        } else if constexpr (std::is_same_v<T, WeightedLinearKernel>) {
          return weighted_linear_rows(x, a, k);
        } else if constexpr (std::is_same_v<T, GaussianKernel>) {
          return gaussian_value(x, a, k.beta, k.form);
        } else if constexpr (std::is_same_v<T, CalibratedGaussianKernel>) {
          require_same_dim(x, a);
          return calibrated_row(k, x, a.transpose())[0];
        } else {
          return composite_kernel(x, a, k);
        }
      },
      spec.variant());
}

Vector kernel_row(const KernelSpec& spec, const VectorRef& x, const Matrix& anchors) {
  if (anchors.rows() > 0 && anchors.cols() != x.size()) {
    raise(ErrorCode::DimensionMismatch, "query has size " + std::to_string(x.size()) +
                                            ", anchors have " + std::to_string(anchors.cols()));
  }
  if (const auto* calibrated = spec.get_if<CalibratedGaussianKernel>()) {
    return calibrated_row(*calibrated, x, anchors);
  }
  if (const auto* composite = spec.get_if<CompositeKernel>()) {
    if (composite->kernels.empty()) raise(ErrorCode::EmptyComposite, "composite has no terms");
    if (composite->weights.size() != composite->kernels.size()) {
      raise(ErrorCode::InvalidArgument, "composite weights and kernels differ in length");
    }
    Vector sum = Vector::Zero(anchors.rows());
    for (std::size_t i = 0; i < composite->kernels.size(); ++i) {
      sum += composite->weights[i] * kernel_row(composite->kernels[i], x, anchors);
    }
    return sum;
  }
  if (spec.get_if<LinearKernel>()) return anchors * x;
  if (const auto* g = spec.get_if<GaussianKernel>()) {
    if (g->form == GaussianForm::Affinity) {
      return (-g->beta * (1.0 - (anchors * x).array())).exp().matrix();
    }
    return (-g->beta * (anchors.rowwise() - x.transpose()).rowwise().squaredNorm().array() / 2.0)
        .exp()
        .matrix();
  }
  const Matrix columns = anchors.transpose();
  Vector out(anchors.rows());
  for (Eigen::Index i = 0; i < anchors.rows(); ++i) out[i] = evaluate(spec, x, columns.col(i));
  return out;
}

KernelVector kernel_vector(const VectorRef& x, const FeatureBundle& image_anchors,
                           const FeatureBundle& text_anchors, const KernelSpec& spec_im,
                           const KernelSpec& spec_txt) {
  if (image_anchors.empty() && text_anchors.empty()) {
    raise(ErrorCode::MissingAnchors, "kernel vector needs at least one anchor block");
  }
  const Vector im = image_anchors.empty() ? Vector() : kernel_row(spec_im, x, image_anchors.data());
  const Vector txt = text_anchors.empty() ? Vector() : kernel_row(spec_txt, x, text_anchors.data());
  KernelVector out;
  out.image_count = im.size();
  out.values.resize(im.size() + txt.size());
  out.values << im, txt;
  return out;
}

namespace {

bool contains_calibrated(const KernelSpec& spec) {
  if (spec.get_if<CalibratedGaussianKernel>()) return true;
  if (const auto* composite = spec.get_if<CompositeKernel>()) {
    for (const auto& sub : composite->kernels) {
      if (contains_calibrated(sub)) return true;
    }
  }
  return false;
}

}  // namespace

KernelMatrix gram_matrix(const Matrix& anchors, const KernelSpec& spec) {
  if (anchors.rows() == 0) raise(ErrorCode::MissingAnchors, "Gram matrix needs anchors");
  if (contains_calibrated(spec)) {
    raise(ErrorCode::UnsupportedKernel, "calibrated kernels have no symmetric Gram matrix");
  }
  const Eigen::Index n = anchors.rows();
  const Matrix columns = anchors.transpose();
  KernelMatrix out{Matrix(n, n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      const double v = evaluate(spec, columns.col(i), columns.col(j));
      out.values(i, j) = v;
      out.values(j, i) = v;
    }
  }
  return out;
}

KernelMatrix gram_matrix(const FeatureBundle& anchors, const KernelSpec& spec) {
  return gram_matrix(anchors.data(), spec);
}

}  // namespace rpft
