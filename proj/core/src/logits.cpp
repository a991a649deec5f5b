#include "rpft/logits.hpp"

#include <cmath>
#include <limits>
#include <memory>
#include <string>

#include "rpft/error.hpp"
#include "rpft/krr.hpp"

namespace rpft {
namespace {

void require_both_blocks(const AnchorSet& anchors) {
  if (anchors.image.empty()) raise(ErrorCode::MissingAnchors, "image anchors are required");
  if (anchors.text.empty()) raise(ErrorCode::MissingAnchors, "text anchors are required");
}

void require_width(const OneHotLabels& Z, Eigen::Index n) {
  if (Z.size() != n) {
    raise(ErrorCode::DimensionMismatch, "label matrix has " + std::to_string(Z.size()) +
                                            " columns for " + std::to_string(n) + " anchors");
  }
}

Vector fused_logits(const VectorRef& x, const AnchorSet& anchors, const Matrix& image_values,
                    const KernelSpec& image_kernel, double logit_scale) {
  const TransformMatrix V = cache_transform(image_values, logit_scale,
                                            static_cast<int>(anchors.text.rows()));
  return V.apply(kernel_vector(x, anchors.image, anchors.text, image_kernel, KernelSpec::linear()));
}

}  // namespace

std::string_view to_string(Fusion f) noexcept { return f == Fusion::Sum ? "sum" : "concat"; }

Eigen::Index TransformMatrix::class_count() const {
  if (image_block) return image_block->rows();
  if (text_block) return text_block->rows();
  return 0;
}

Vector TransformMatrix::apply(const KernelVector& k) const {
  if (!image_block && !text_block) raise(ErrorCode::InvalidArgument, "transform has no blocks");
  if (image_block && text_block && image_block->rows() != text_block->rows()) {
    raise(ErrorCode::DimensionMismatch, "transform blocks disagree on class count");
  }
  const Eigen::Index im_width = image_block ? image_block->cols() : 0;
  const Eigen::Index txt_width = text_block ? text_block->cols() : 0;
  if (im_width != k.image_count || txt_width != k.text_count()) {
    raise(ErrorCode::DimensionMismatch,
          "transform widths (" + std::to_string(im_width) + ", " + std::to_string(txt_width) +
              ") do not match kernel blocks (" + std::to_string(k.image_count) + ", " +
              std::to_string(k.text_count()) + ")");
  }
  Vector out = Vector::Zero(class_count());
  if (image_block && im_width > 0) out += *image_block * k.image_block();
  if (text_block && txt_width > 0) out += *text_block * k.text_block();
  return out;
}

Matrix Scorer::score(const Matrix& queries) const {
  Matrix out(queries.rows(), class_count());
  for (Eigen::Index i = 0; i < queries.rows(); ++i) {
    out.row(i) = logits(queries.row(i).transpose()).transpose();
  }
  return out;
}

int Scorer::predict(const VectorRef& x) const { return static_cast<int>(argmax(logits(x))); }

Vector cache_logits(const OneHotLabels& Z, const VectorRef& k_image, double alpha) {
  require_width(Z, k_image.size());
  return alpha * (Z.matrix() * k_image);
}

Vector zero_shot_logits(const VectorRef& x, const FeatureBundle& text_anchors) {
  if (text_anchors.empty()) raise(ErrorCode::MissingAnchors, "text anchors are required");
  if (text_anchors.dim() != x.size()) {
    raise(ErrorCode::DimensionMismatch, "query and text anchors differ in dimension");
  }
  return text_anchors.data() * x;
}

TransformMatrix cache_transform(const Matrix& image_values, double logit_scale, int class_count,
                                Fusion fusion) {
  TransformMatrix V;
  V.fusion = fusion;
  if (image_values.cols() > 0) {
    if (image_values.rows() != class_count) {
      raise(ErrorCode::DimensionMismatch, "cache values have the wrong number of classes");
    }
    V.image_block = image_values;
  }
  V.text_block = logit_scale * Matrix::Identity(class_count, class_count);
  return V;
}

KernelSpec cache_image_kernel(const HyperParams& hp) {
  return KernelSpec::gaussian(hp.beta, GaussianForm::Affinity);
}

Vector tip_adapter_logits(const VectorRef& x, const AnchorSet& anchors, const OneHotLabels& Z,
                          const HyperParams& hp) {
  require_both_blocks(anchors);
  require_width(Z, anchors.image_count());
  return fused_logits(x, anchors, hp.alpha * Z.matrix(), cache_image_kernel(hp), hp.logit_scale);
}

Vector krr_transform_logits(const VectorRef& x, const AnchorSet& anchors, const OneHotLabels& Z,
                            const HyperParams& hp, const KernelMatrix& K) {
  require_both_blocks(anchors);
  require_width(Z, anchors.image_count());
  const Matrix values = hp.alpha * correlation_operator(Z, K, hp.lambda);
  return fused_logits(x, anchors, values, cache_image_kernel(hp), hp.logit_scale);
}

Vector ape_logits(const VectorRef& x, const AnchorSet& anchors, const OneHotLabels& Z,
                  const HyperParams& hp, const CacheScores& scores) {
  require_both_blocks(anchors);
  require_width(Z, anchors.image_count());
  if (scores.r_fw.size() != anchors.image_count()) {
    raise(ErrorCode::DimensionMismatch, "cache scores do not match the image anchors");
  }
  const Matrix values = hp.alpha * (Z.matrix() * scores.r_fw.asDiagonal());
  return fused_logits(x, anchors, values, cache_image_kernel(hp), hp.logit_scale);
}

CacheScores ape_scores(const FeatureBundle& image_anchors, const FeatureBundle& text_anchors,
                       const OneHotLabels& Z, double gamma, double tau) {
  if (image_anchors.empty() || text_anchors.empty()) {
    raise(ErrorCode::MissingAnchors, "cache scores need both anchor blocks");
  }
  require_width(Z, image_anchors.rows());
  if (Z.class_count() != text_anchors.rows()) {
    raise(ErrorCode::DimensionMismatch, "label matrix and text anchors disagree on class count");
  }
  // Largest divergence representable with probabilities floored at 1e-12.
  const double max_divergence = -std::log(1e-12);
  CacheScores out{Vector(image_anchors.rows())};
  for (Eigen::Index i = 0; i < image_anchors.rows(); ++i) {
    Vector logits = (text_anchors.data() * image_anchors.data().row(i).transpose()) / tau;
    const double top = logits.maxCoeff();
    const double log_norm = top + std::log((logits.array() - top).exp().sum());
    const int y = Z.labels()[static_cast<std::size_t>(i)];
    const double divergence = std::min(log_norm - logits[y], max_divergence);
    const double score = std::exp(gamma * divergence);
    if (!std::isfinite(score) || !(score > 0.0)) {
      raise(ErrorCode::DegenerateSoftmax, "cache score for anchor " + std::to_string(i) +
                                              " is not a positive finite number");
    }
    out.r_fw[i] = score;
  }
  return out;
}

KernelSpec calibrated_image_kernel(const HyperParams& hp, const FeatureBundle& text_anchors) {
  if (text_anchors.empty()) raise(ErrorCode::MissingTextAnchors, "text anchors are required");
  CalibratedGaussianKernel k;
  k.alpha_mix = hp.alpha;
  k.gamma = hp.gamma;
  k.tau = hp.tau;
  k.beta = hp.beta;
  k.form = GaussianForm::Affinity;
  k.text_anchors = std::make_shared<const Matrix>(text_anchors.data());
  return KernelSpec(std::move(k));
}

Vector susx_logits(const VectorRef& x, const AnchorSet& anchors, const OneHotLabels& Z,
                   const HyperParams& hp) {
  require_both_blocks(anchors);
  require_width(Z, anchors.image_count());
  return fused_logits(x, anchors, Z.matrix(), calibrated_image_kernel(hp, anchors.text),
                      hp.logit_scale);
}

}  // namespace rpft
