#include "rpft/krr.hpp"

#include <cmath>
#include <string>

#include "rpft/error.hpp"

namespace rpft {

Matrix KrrSolution::solve(const Matrix& rhs) const {
  if (rhs.rows() != system_.rows()) {
    raise(ErrorCode::DimensionMismatch, "right-hand side has the wrong number of rows");
  }
  return factor_.solve(rhs);
}

double KrrSolution::residual_with_jitter() const {
  const Matrix jittered =
      system_ + jitter_ * Matrix::Identity(system_.rows(), system_.cols());
  return (jittered * coefficients_ - targets_).cwiseAbs().maxCoeff();
}

double KrrSolution::residual() const {
  if (coefficients_.size() == 0) return 0.0;
  return (system_ * coefficients_ - targets_).cwiseAbs().maxCoeff();
}

KrrSolution solve(const KernelMatrix& K, const OneHotLabels& Y, double lambda) {
  if (Y.size() != K.values.rows()) {
    raise(ErrorCode::DimensionMismatch, "kernel matrix is " + std::to_string(K.values.rows()) +
                                            " wide, labels have " + std::to_string(Y.size()) +
                                            " columns");
  }
  return solve_targets(K, Y.matrix().transpose(), lambda);
}

KrrSolution solve_targets(const KernelMatrix& K, const Matrix& targets, double lambda) {
  const Eigen::Index n = K.values.rows();
  if (K.values.cols() != n) raise(ErrorCode::DimensionMismatch, "kernel matrix is not square");
  if (targets.rows() != n) {
    raise(ErrorCode::DimensionMismatch, "targets do not match the kernel matrix");
  }
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    raise(ErrorCode::InvalidArgument, "lambda must be finite and >= 0");
  }
  if (n > 0 && (K.values - K.values.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    raise(ErrorCode::InvalidArgument, "kernel matrix is not symmetric");
  }

  KrrSolution sol;
  sol.lambda_ = lambda;
  sol.system_ = K.values + lambda * Matrix::Identity(n, n);
  sol.targets_ = targets;
  if (n == 0) {
    sol.coefficients_ = Matrix(0, targets.cols());
    return sol;
  }

  const double mean_diag = std::max(std::abs(K.values.diagonal().mean()), 1e-300);
  double jitter = 0.0;
  for (int attempt = 0; attempt <= KrrSolution::kMaxEscalations + 1; ++attempt) {
    if (attempt == 1) jitter = 1e-10 * mean_diag;
    if (attempt > 1) jitter *= 10.0;
    sol.jitter_history_.push_back(jitter);
    sol.factor_.compute(sol.system_ + jitter * Matrix::Identity(n, n));
    if (sol.factor_.info() != Eigen::Success) continue;
    sol.coefficients_ = sol.factor_.solve(sol.targets_);
    if (!sol.coefficients_.allFinite()) continue;
    sol.jitter_ = jitter;
    // Jitter may rescue round-off indefiniteness, never a genuinely singular system.
    if (sol.residual() <= KrrSolution::kResidualTolerance) return sol;
  }
  raise(ErrorCode::NotPositiveDefinite,
        "K + lambda I could not be factorized (lambda=" + std::to_string(lambda) +
            ", final jitter=" + std::to_string(jitter) + ")");
}

Vector predict(const KrrSolution& sol, const VectorRef& k_image) {
  if (k_image.size() != sol.size()) {
    raise(ErrorCode::DimensionMismatch, "kernel vector has " + std::to_string(k_image.size()) +
                                            " entries, solution has " +
                                            std::to_string(sol.size()) + " anchors");
  }
  return sol.coefficients().transpose() * k_image;
}

Matrix correlation_operator(const OneHotLabels& Z, const KernelMatrix& K, double lambda) {
  return solve(K, Z, lambda).coefficients().transpose();
}

InterpolationReport interpolation_check(const KrrSolution& sol, const KernelMatrix& K) {
  if (K.values.rows() != sol.size()) {
    raise(ErrorCode::DimensionMismatch, "kernel matrix does not match the solution");
  }
  InterpolationReport report;
  report.lambda = sol.lambda();
  report.jitter = sol.jitter();
  report.coefficient_norm = sol.coefficients().norm();
  report.target_norm = sol.targets().norm();
  if (sol.size() > 0) {
    report.max_abs_deviation =
        (K.values * sol.coefficients() - sol.targets()).cwiseAbs().maxCoeff();
  }
  return report;
}

}  // namespace rpft
