#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rpft/anchors.hpp"
#include "rpft/kernels.hpp"
#include "rpft/logits.hpp"
#include "rpft/types.hpp"

namespace rpft {

/// Trainable cache model:
///   logits(x) = s * W x + alpha * values * (r .* k(x)),  k_i(x) = exp(-beta (1 - A_i . x))
/// keys A (n1 x d) and scores r (n1, strictly positive) are the learnable parts.
struct CacheModel {
  Matrix keys;    // n1 x d
  Vector scores;  // n1
  Matrix values;  // C x n1, Z for the cache form, Z (K + lambda I)^{-1} for KRR
  Matrix text;    // C x d
  double alpha = 1.0;
  double beta = 5.0;
  double logit_scale = 100.0;

  int class_count() const noexcept { return static_cast<int>(values.rows()); }
  Vector kernel(const VectorRef& x) const;
  Vector logits(const VectorRef& x) const;
};

/// Builds a model with unit scores. Throws KernelMismatch unless `image_kernel` is Gaussian.
CacheModel make_cache_model(const AnchorSet& anchors, const Matrix& values, const HyperParams& hp,
                            const KernelSpec& image_kernel);

/// Mean of -log softmax(logits_b)[y_b] over the rows of `logits`, probabilities floored at 1e-12.
double cross_entropy_loss(const Matrix& logits, std::span<const int> labels);

double model_loss(const CacheModel& model, const Matrix& batch, std::span<const int> labels);

/// d(mean cross-entropy) / d keys, n1 x d. Samples whose probability sits below the
/// loss floor contribute nothing, matching the flat floored loss.
Matrix grad_keys(const CacheModel& model, const Matrix& batch, std::span<const int> labels);

/// d(mean cross-entropy) / d scores r, length n1.
Vector grad_cache_scores(const CacheModel& model, const Matrix& batch, std::span<const int> labels);

struct GradientCheck {
  double keys_max_rel_error = 0.0;
  double scores_max_rel_error = 0.0;

  double max_rel_error() const { return std::max(keys_max_rel_error, scores_max_rel_error); }
};

/// max_i |analytic_i - numeric_i| / max(|analytic|_inf, |numeric|_inf, floor). The floor keeps
/// a vanishing gradient, e.g. under a saturated softmax, from reading as a large error.
inline constexpr double kRelativeErrorFloor = 1e-8;
double relative_error(const Eigen::Ref<const Matrix>& analytic, const Eigen::Ref<const Matrix>& numeric,
                      double floor = kRelativeErrorFloor);

Matrix numeric_grad_keys(const CacheModel& model, const Matrix& batch, std::span<const int> labels,
                         double h = 1e-4);
Vector numeric_grad_cache_scores(const CacheModel& model, const Matrix& batch,
                                 std::span<const int> labels, double h = 1e-4);

/// Compares against central differences with step h. The relative-error floor is the
/// larger of kRelativeErrorFloor and 1e4 * eps * max(1, |loss|) / h, the smallest gradient
/// a central difference resolves to four digits.
GradientCheck check_gradients(const CacheModel& model, const Matrix& batch,
                              std::span<const int> labels, double h = 1e-4);

enum class TrainTarget { Keys, CacheScores, Both };

struct TrainConfig {
  double learning_rate = 1e-3;
  int epochs = 20;
  int batch_size = 32;
  double weight_decay = 0.0;
  std::uint64_t seed = 1;
  TrainTarget target = TrainTarget::Keys;
  bool normalize_keys = false;
  bool cosine_decay = false;

  void validate() const;
};

struct TrainReport {
  std::vector<double> loss_history;  // full-episode loss after each epoch
  CacheModel model;                  // parameters from the best epoch
  GradientCheck initial_check;
  double best_val_accuracy = -1.0;   // -1 when no labeled validation bundle was given
  int best_epoch = 0;
};

/// Mini-batch gradient descent on the episode rows. Epoch e visits the rows in the
/// order of a Fisher-Yates shuffle by Rng(mix_seed(seed, e)). Scores are trained as
/// r = exp(rho). Weight decay adds weight_decay * theta to each gradient (theta = keys
/// or rho). Throws DivergedLoss on a non-finite loss.
TrainReport train(const TrainConfig& config, const FeatureBundle& episode, const CacheModel& init,
                  const FeatureBundle* val = nullptr);

std::string_view to_string(TrainTarget t) noexcept;

}  // namespace rpft
