#pragma once

#include <optional>
#include <string_view>

#include "rpft/anchors.hpp"
#include "rpft/kernels.hpp"
#include "rpft/types.hpp"

namespace rpft {

/// Which published form a transform reproduces. Both evaluate
/// image_block * k_im + text_block * k_txt.
enum class Fusion {
  Concat,  // V = [B_im, B_txt] over the stacked kernel vector
  Sum,     // V = B_im + B_txt over a shared class space
};

std::string_view to_string(Fusion f) noexcept;

/// C x n map from kernel features to class logits.
struct TransformMatrix {
  std::optional<Matrix> image_block;  // C x n1
  std::optional<Matrix> text_block;   // C x n2
  Fusion fusion = Fusion::Concat;

  Eigen::Index class_count() const;
  /// Throws DimensionMismatch when block widths differ from the kernel vector's blocks.
  Vector apply(const KernelVector& k) const;
};

/// Values of the positive per-anchor cache weights.
struct CacheScores {
  Vector r_fw;
};

/// Anything that maps a query embedding to C class logits.
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual int class_count() const = 0;
  virtual Vector logits(const VectorRef& x) const = 0;

  /// One row of logits per query row; identical to calling logits() per row.
  Matrix score(const Matrix& queries) const;
  /// argmax of logits(x), lowest index on ties.
  int predict(const VectorRef& x) const;
};

/// alpha * Z * k_im.
Vector cache_logits(const OneHotLabels& Z, const VectorRef& k_image, double alpha);

/// Cosine similarities against each text anchor (V = I, linear kernel).
Vector zero_shot_logits(const VectorRef& x, const FeatureBundle& text_anchors);

/// [values_im, s I] applied to [k_im(x); k_txt(x)] with affinity-form Gaussian
/// image kernel and linear text kernel. Shared path for the cache-style methods.
TransformMatrix cache_transform(const Matrix& image_values, double logit_scale, int class_count,
                                Fusion fusion = Fusion::Concat);

/// Gaussian (affinity form, hp.beta) image kernel used by every cache-style method.
KernelSpec cache_image_kernel(const HyperParams& hp);

/// s * W x + alpha * Z * k_gau(x).
Vector tip_adapter_logits(const VectorRef& x, const AnchorSet& anchors, const OneHotLabels& Z,
                          const HyperParams& hp);

/// s * W x + alpha * Z (K + lambda I)^{-1} k_gau(x).
Vector krr_transform_logits(const VectorRef& x, const AnchorSet& anchors, const OneHotLabels& Z,
                            const HyperParams& hp, const KernelMatrix& K);

/// s * W x + alpha * Z diag(R_FW) k_gau(x).
Vector ape_logits(const VectorRef& x, const AnchorSet& anchors, const OneHotLabels& Z,
                  const HyperParams& hp, const CacheScores& scores);

/// R_FW[i] = exp(gamma * d_i), d_i = -log softmax(W f_i / tau)[y_i].
/// Throws DegenerateSoftmax when a score underflows or overflows.
CacheScores ape_scores(const FeatureBundle& image_anchors, const FeatureBundle& text_anchors,
                       const OneHotLabels& Z, double gamma, double tau);

/// Calibrated image kernel (SuS-X) built from hp and the text anchors.
KernelSpec calibrated_image_kernel(const HyperParams& hp, const FeatureBundle& text_anchors);

/// s * W x + Z * k_calib(x).
Vector susx_logits(const VectorRef& x, const AnchorSet& anchors, const OneHotLabels& Z,
                   const HyperParams& hp);

}  // namespace rpft
