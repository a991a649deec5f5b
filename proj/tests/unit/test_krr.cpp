#include <gtest/gtest.h>

#include "expect_error.hpp"
#include "oracles.hpp"
#include "rpft/kernels.hpp"
#include "rpft/krr.hpp"

namespace rpft {
namespace {

using testing::code_of;

OneHotLabels labels(std::vector<int> y, int classes) { return one_hot(y, classes); }

TEST(KrrSolve, IdentityKernelLambdaOne) {
  const KernelMatrix K{Matrix::Identity(2, 2)};
  const KrrSolution sol = solve(K, labels({0, 1}, 2), 1.0);
  EXPECT_TRUE(sol.coefficients().isApprox(0.5 * Matrix::Identity(2, 2), 1e-15));
  EXPECT_EQ(sol.jitter(), 0.0);
  EXPECT_EQ(sol.jitter_history().size(), 1u);
}

TEST(KrrSolve, LambdaZeroMatchesTwoByTwoInverse) {
  Matrix k(2, 2);
  k << 1.0, 0.5, 0.5, 1.0;
  const KrrSolution sol = solve(KernelMatrix{k}, labels({0, 1}, 2), 0.0);
  const Matrix oracle = testing::from_grid(testing::inverse_2x2(1.0, 0.5, 0.5, 1.0));
  Matrix hand(2, 2);
  hand << 1.0, -0.5, -0.5, 1.0;
  hand /= 0.75;
  EXPECT_LE((sol.coefficients() - oracle).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LE((oracle - hand).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(KrrSolve, ZeroTargetsGiveZeroCoefficients) {
  Rng rng(1);
  const KernelMatrix K{testing::random_spd(rng, 5, 0.5)};
  const KrrSolution sol = solve_targets(K, Matrix::Zero(5, 3), 0.1);
  EXPECT_EQ(sol.coefficients(), Matrix::Zero(5, 3));
}

TEST(KrrSolve, ResidualInvariantOnRandomSpd) {
  Rng rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 3 + static_cast<int>(rng.uniform_index(20));
    const Matrix a = testing::random_unit_rows(rng, n, 6);
    std::vector<int> y(static_cast<std::size_t>(n));
    for (auto& v : y) v = static_cast<int>(rng.uniform_index(4));
    const KernelMatrix K = gram_matrix(a, KernelSpec::gaussian(5.0));
    for (double lambda : {0.0, 0.1, 1.0}) {
      const KrrSolution sol = solve(K, labels(y, 4), lambda);
      EXPECT_LE(sol.residual_with_jitter(), KrrSolution::kResidualTolerance);
      EXPECT_LE(sol.residual(), KrrSolution::kResidualTolerance);
    }
  }
}

TEST(KrrSolve, DuplicateAnchorsLambdaZeroIsNotPositiveDefinite) {
  Matrix a(3, 2);
  a << 1, 0, 1, 0, 0, 1;
  const KernelMatrix K = gram_matrix(a, KernelSpec::gaussian(5.0));
  EXPECT_EQ(code_of([&] { solve(K, labels({0, 1, 1}, 2), 0.0); }),
            ErrorCode::NotPositiveDefinite);
}

TEST(KrrSolve, DuplicateAnchorsWithRidgeSucceed) {
  Matrix a(3, 2);
  a << 1, 0, 1, 0, 0, 1;
  const KernelMatrix K = gram_matrix(a, KernelSpec::gaussian(5.0));
  const KrrSolution sol = solve(K, labels({0, 1, 1}, 2), 0.1);
  EXPECT_LE(sol.residual(), 1e-12);
}

TEST(KrrSolve, JitterRescuesRoundoffIndefiniteness) {
  // Rank-deficient PSD matrix nudged slightly negative; a ridge-free solve must jitter.
  Matrix v(4, 2);
  v << 1, 0, 0, 1, 1, 1, 1, -1;
  Matrix k = v * v.transpose();
  k.diagonal().array() -= 1e-14;
  const KrrSolution sol = solve_targets(KernelMatrix{k}, Matrix::Zero(4, 1), 0.0);
  EXPECT_GT(sol.jitter(), 0.0);
  EXPECT_GE(sol.jitter_history().size(), 2u);
  for (std::size_t i = 2; i < sol.jitter_history().size(); ++i) {
    EXPECT_DOUBLE_EQ(sol.jitter_history()[i], 10.0 * sol.jitter_history()[i - 1]);
  }
}

TEST(KrrSolve, Preconditions) {
  Matrix asym(2, 2);
  asym << 1, 0.5, 0.4, 1;
  EXPECT_EQ(code_of([&] { solve(KernelMatrix{asym}, labels({0, 1}, 2), 0.1); }),
            ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([&] { solve(KernelMatrix{Matrix::Identity(2, 2)}, labels({0, 1}, 2), -1.0); }),
            ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([&] { solve(KernelMatrix{Matrix::Identity(3, 3)}, labels({0, 1}, 2), 0.1); }),
            ErrorCode::DimensionMismatch);
}

TEST(KrrPredict, BasisVectorExtractsColumn) {
  Rng rng(3);
  const KernelMatrix K{testing::random_spd(rng, 4, 1.0)};
  const KrrSolution sol = solve(K, labels({0, 1, 2, 0}, 3), 0.1);
  for (Eigen::Index j = 0; j < 4; ++j) {
    const Vector e = Vector::Unit(4, j);
    EXPECT_EQ(predict(sol, e), sol.coefficients().transpose().col(j));
  }
}

TEST(KrrPredict, OrthonormalCase) {
  const KrrSolution sol = solve(KernelMatrix{Matrix::Identity(2, 2)}, labels({0, 1}, 2), 1.0);
  Vector k(2);
  k << 1.0, 0.0;
  const Vector p = predict(sol, k);
  EXPECT_DOUBLE_EQ(p[0], 0.5);
  EXPECT_DOUBLE_EQ(p[1], 0.0);
  EXPECT_EQ(predict(sol, Vector::Zero(2)), Vector::Zero(2));
}

TEST(CorrelationOperator, ZeroKernelLambdaOneIsZ) {
  const OneHotLabels z = labels({0, 0, 1, 2}, 3);
  EXPECT_EQ(correlation_operator(z, KernelMatrix{Matrix::Zero(4, 4)}, 1.0), z.matrix());
}

TEST(CorrelationOperator, IdentityKernelHalvesZ) {
  const OneHotLabels z = labels({0, 1, 1, 0}, 2);
  const Matrix got = correlation_operator(z, KernelMatrix{Matrix::Identity(4, 4)}, 1.0);
  EXPECT_LE((got - 0.5 * z.matrix()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(CorrelationOperator, MatchesExplicitInverseOracle) {
  Rng rng(4);
  for (int trial = 0; trial < 5; ++trial) {
    const Matrix k = testing::random_spd(rng, 4, 0.3);
    const OneHotLabels z = labels({0, 1, 0, 1}, 2);
    const double lambda = 0.1;
    Matrix shifted = k;
    shifted.diagonal().array() += lambda;
    const Matrix inv = testing::from_grid(testing::gauss_jordan_inverse(testing::to_grid(shifted)));
    const Matrix oracle = testing::from_grid(
        testing::multiply(testing::to_grid(z.matrix()), testing::to_grid(inv)));
    EXPECT_LE((correlation_operator(z, KernelMatrix{k}, lambda) - oracle).cwiseAbs().maxCoeff(),
              1e-10);
  }
}

TEST(Interpolation, TinyLambdaFitsTargets) {
  Rng rng(5);
  const Matrix a = testing::random_unit_rows(rng, 16, 8);
  std::vector<int> y;
  for (int i = 0; i < 16; ++i) y.push_back(i % 4);
  const KernelMatrix K = gram_matrix(a, KernelSpec::gaussian(5.0));
  const KrrSolution sol = solve(K, labels(y, 4), 1e-10);
  const InterpolationReport r = interpolation_check(sol, K);
  EXPECT_LE(r.max_abs_deviation, 1e-4);
  EXPECT_EQ(r.lambda, 1e-10);
}

TEST(Interpolation, LargeLambdaShrinksCoefficients) {
  Rng rng(6);
  const Matrix a = testing::random_unit_rows(rng, 12, 5);
  std::vector<int> y;
  for (int i = 0; i < 12; ++i) y.push_back(i % 3);
  const KernelMatrix K = gram_matrix(a, KernelSpec::gaussian(5.0));
  const double lambda = 1e6;
  const InterpolationReport r = interpolation_check(solve(K, labels(y, 3), lambda), K);
  EXPECT_LE(r.coefficient_norm, r.target_norm / lambda * (1 + 1e-6));
  EXPECT_GT(r.coefficient_norm, 0.0);
}

}  // namespace
}  // namespace rpft
