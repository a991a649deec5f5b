#pragma once

#include <vector>

#include "rpft/kernels.hpp"
#include "rpft/types.hpp"

namespace rpft {

/// Closed-form kernel ridge regression onto one-hot targets.
///
/// The system (K + lambda I) alpha = Y^T is factorized with LLT. When the
/// factorization fails, or its solution misses the unjittered system by more
/// than kResidualTolerance, a diagonal jitter of 1e-10 * mean(diag K) is added
/// and multiplied by 10 on each retry, up to kMaxEscalations retries. Every
/// attempted jitter is kept in `jitter_history` for auditing.
class KrrSolution {
 public:
  static constexpr double kResidualTolerance = 1e-8;
  static constexpr int kMaxEscalations = 3;

  const Matrix& coefficients() const noexcept { return coefficients_; }  // n x C
  const Matrix& targets() const noexcept { return targets_; }            // n x C (= Y^T)
  double lambda() const noexcept { return lambda_; }
  double jitter() const noexcept { return jitter_; }
  const std::vector<double>& jitter_history() const noexcept { return jitter_history_; }
  Eigen::Index size() const noexcept { return coefficients_.rows(); }
  int class_count() const noexcept { return static_cast<int>(coefficients_.cols()); }

  /// Solves (K + (lambda + jitter) I) X = rhs with the stored factorization.
  Matrix solve(const Matrix& rhs) const;

  /// max |(K + lambda I + jitter I) alpha - Y^T|, recomputed from the stored system.
  double residual_with_jitter() const;
  /// max |(K + lambda I) alpha - Y^T|.
  double residual() const;

  friend KrrSolution solve_targets(const KernelMatrix& K, const Matrix& targets, double lambda);

 private:
  Matrix system_;  // K + lambda I, without jitter
  Eigen::LLT<Matrix> factor_;
  Matrix coefficients_;
  Matrix targets_;
  double lambda_ = 0.0;
  double jitter_ = 0.0;
  std::vector<double> jitter_history_;
};

/// Throws DimensionMismatch (K vs Y), InvalidArgument (lambda < 0, K asymmetric),
/// or NotPositiveDefinite once the jitter ladder is exhausted.
KrrSolution solve(const KernelMatrix& K, const OneHotLabels& Y, double lambda);
/// Same as solve() for arbitrary n x C targets (rows aligned with K).
KrrSolution solve_targets(const KernelMatrix& K, const Matrix& targets, double lambda);

/// Class scores alpha^T k for the image-anchor block of a kernel vector.
Vector predict(const KrrSolution& sol, const VectorRef& k_image);

/// Z (K + lambda I)^{-1}, computed as the transpose of (K + lambda I)^{-1} Z^T.
Matrix correlation_operator(const OneHotLabels& Z, const KernelMatrix& K, double lambda);

struct InterpolationReport {
  double max_abs_deviation = 0.0;  // max |K alpha - Y^T|
  double coefficient_norm = 0.0;    // Frobenius norm of alpha
  double target_norm = 0.0;         // Frobenius norm of Y
  double lambda = 0.0;
  double jitter = 0.0;
};

InterpolationReport interpolation_check(const KrrSolution& sol, const KernelMatrix& K);

}  // namespace rpft
