#include <gtest/gtest.h>

#include <cmath>

#include "expect_error.hpp"
#include "oracles.hpp"
#include "rpft/krr.hpp"
#include "rpft/logits.hpp"

namespace rpft {
namespace {

using testing::code_of;

struct Toy {
  AnchorSet anchors;
  OneHotLabels Z;
  Matrix queries;
};

// C classes, M shots each, unit rows in d dimensions.
Toy make_toy(std::uint64_t seed, int C, int M, int d, int queries = 5) {
  Rng rng(seed);
  std::vector<int> y;
  for (int c = 0; c < C; ++c) {
    for (int m = 0; m < M; ++m) y.push_back(c);
  }
  Toy t;
  const AnchorSet im = image_anchors_from_shots(
      testing::labeled_bundle(testing::random_unit_rows(rng, C * M, d), C, y));
  const AnchorSet tx =
      text_anchors_from_bundle(testing::text_bundle(testing::random_unit_rows(rng, C, d)), C);
  t.anchors = combine(im, tx);
  t.Z = one_hot(t.anchors.image.labels(), C);
  t.queries = testing::random_unit_rows(rng, queries, d);
  return t;
}

double affinity_oracle(const std::vector<double>& x, const std::vector<double>& a, double beta) {
  return std::exp(-beta * (1.0 - testing::dot(x, a)));
}

TEST(CacheLogits, BasisSelectsLabelColumn) {
  const OneHotLabels Z = one_hot(std::vector<int>{1, 0, 2}, 3);
  for (Eigen::Index j = 0; j < 3; ++j) {
    EXPECT_EQ(cache_logits(Z, Vector::Unit(3, j), 1.0), Z.matrix().col(j));
  }
}

TEST(CacheLogits, AlphaZeroIsZero) {
  const OneHotLabels Z = one_hot(std::vector<int>{0, 1}, 2);
  EXPECT_EQ(cache_logits(Z, Vector::Ones(2), 0.0), Vector::Zero(2));
}

TEST(CacheLogits, HandProduct) {
  const OneHotLabels Z = one_hot(std::vector<int>{0, 1}, 2);
  Vector k(2);
  k << 0.9, 0.1;
  const Vector got = cache_logits(Z, k, 2.0);
  EXPECT_DOUBLE_EQ(got[0], 1.8);
  EXPECT_DOUBLE_EQ(got[1], 0.2);
}

TEST(ZeroShot, SelfAnchorIsMaximumOne) {
  Rng rng(1);
  const FeatureBundle text = testing::text_bundle(testing::random_unit_rows(rng, 4, 6));
  for (Eigen::Index c = 0; c < 4; ++c) {
    const Vector z = zero_shot_logits(text.data().row(c).transpose(), text);
    EXPECT_NEAR(z[c], 1.0, 1e-15);
    EXPECT_EQ(argmax(z), c);
  }
}

TEST(ZeroShot, OrthonormalAnchors) {
  const FeatureBundle text = testing::text_bundle(Matrix::Identity(3, 3));
  EXPECT_EQ(zero_shot_logits(Vector::Unit(3, 0), text), Vector::Unit(3, 0));
}

TEST(ZeroShot, ArgmaxInvariantUnderPositiveScaling) {
  Rng rng(2);
  const FeatureBundle text = testing::text_bundle(testing::random_unit_rows(rng, 5, 8));
  const Matrix q = testing::random_unit_rows(rng, 20, 8);
  for (Eigen::Index i = 0; i < q.rows(); ++i) {
    const Vector x = q.row(i).transpose();
    const auto base = argmax(zero_shot_logits(x, text));
    for (double s : {1e-3, 0.5, 7.0, 1e4}) EXPECT_EQ(argmax(zero_shot_logits(s * x, text)), base);
  }
}

TEST(TipAdapter, AlphaZeroIsScaledZeroShot) {
  const Toy t = make_toy(3, 3, 2, 5);
  HyperParams hp;
  hp.alpha = 0.0;
  const Vector x = t.queries.row(0).transpose();
  EXPECT_LE((tip_adapter_logits(x, t.anchors, t.Z, hp) -
             hp.logit_scale * zero_shot_logits(x, t.anchors.text))
                .cwiseAbs()
                .maxCoeff(),
            1e-12);
}

TEST(TipAdapter, LargeBetaSelfShotAddsIndicator) {
  Matrix im(2, 2);
  im << 1, 0, 0, 1;
  const AnchorSet anchors =
      combine(image_anchors_from_shots(testing::labeled_bundle(im, 2, {0, 1})),
              text_anchors_from_bundle(testing::text_bundle(Matrix::Identity(2, 2)), 2));
  const OneHotLabels Z = one_hot(std::vector<int>{0, 1}, 2);
  HyperParams hp;
  hp.alpha = 0.7;
  hp.beta = 100.0;
  const Vector x = im.row(0).transpose();
  const Vector cache =
      tip_adapter_logits(x, anchors, Z, hp) - hp.logit_scale * zero_shot_logits(x, anchors.text);
  EXPECT_NEAR(cache[0], 0.7, 1e-12);
  EXPECT_NEAR(cache[1], 0.0, 1e-12);
}

TEST(TipAdapter, ComposedFromScalarOracles) {
  const Toy t = make_toy(4, 2, 1, 3);
  HyperParams hp;
  hp.alpha = 1.7;
  hp.beta = 3.0;
  hp.logit_scale = 20.0;
  for (Eigen::Index q = 0; q < t.queries.rows(); ++q) {
    const auto x = testing::row(t.queries, q);
    Vector expect(2);
    for (int c = 0; c < 2; ++c) {
      double cache = 0.0;
      for (Eigen::Index i = 0; i < 2; ++i) {
        if (t.anchors.image.labels()[static_cast<std::size_t>(i)] == c) {
          cache += affinity_oracle(x, testing::row(t.anchors.image.data(), i), hp.beta);
        }
      }
      expect[c] = hp.alpha * cache + hp.logit_scale * testing::dot(x, testing::row(t.anchors.text.data(), c));
    }
    EXPECT_LE((tip_adapter_logits(t.queries.row(q).transpose(), t.anchors, t.Z, hp) - expect)
                  .cwiseAbs()
                  .maxCoeff(),
              1e-12);
  }
}

TEST(KrrLogits, ZeroKernelUnitLambdaReducesToTipAdapter) {
  const Toy t = make_toy(5, 3, 2, 6);
  HyperParams hp;
  hp.lambda = 1.0;
  const KernelMatrix zero{Matrix::Zero(6, 6)};
  for (Eigen::Index q = 0; q < t.queries.rows(); ++q) {
    const Vector x = t.queries.row(q).transpose();
    EXPECT_LE((krr_transform_logits(x, t.anchors, t.Z, hp, zero) -
               tip_adapter_logits(x, t.anchors, t.Z, hp))
                  .cwiseAbs()
                  .maxCoeff(),
              1e-12);
  }
}

TEST(KrrLogits, HugeLambdaShrinksCacheTerm) {
  const Toy t = make_toy(6, 3, 2, 6);
  HyperParams hp;
  hp.logit_scale = 1e-6;
  const double lambda = 1e9;
  const KernelMatrix K = gram_matrix(t.anchors.image, cache_image_kernel(hp));
  for (Eigen::Index q = 0; q < t.queries.rows(); ++q) {
    const Vector x = t.queries.row(q).transpose();
    const Vector text = hp.logit_scale * zero_shot_logits(x, t.anchors.text);
    HyperParams krr_hp = hp;
    krr_hp.lambda = lambda;
    const Vector krr_cache = krr_transform_logits(x, t.anchors, t.Z, krr_hp, K) - text;
    const Vector tip_cache = tip_adapter_logits(x, t.anchors, t.Z, hp) - text;
    EXPECT_NEAR(krr_cache.norm() * lambda / tip_cache.norm(), 1.0, 1e-3);
  }
}

TEST(KrrLogits, FourAnchorExplicitInverseOracle) {
  const Toy t = make_toy(7, 2, 2, 4);
  HyperParams hp;
  hp.alpha = 0.9;
  hp.beta = 4.0;
  hp.lambda = 0.05;
  hp.logit_scale = 10.0;
  const Matrix& A = t.anchors.image.data();
  testing::Grid k(4, std::vector<double>(4));
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      k[i][j] = affinity_oracle(testing::row(A, i), testing::row(A, j), hp.beta) +
                (i == j ? hp.lambda : 0.0);
    }
  }
  const testing::Grid inv = testing::gauss_jordan_inverse(k);
  const KernelMatrix K = gram_matrix(t.anchors.image, cache_image_kernel(hp));
  for (Eigen::Index q = 0; q < t.queries.rows(); ++q) {
    const auto x = testing::row(t.queries, q);
    testing::Grid kx(4, std::vector<double>(1));
    for (int i = 0; i < 4; ++i) kx[i][0] = affinity_oracle(x, testing::row(A, i), hp.beta);
    const testing::Grid weights = testing::multiply(inv, kx);
    Vector expect(2);
    for (int c = 0; c < 2; ++c) {
      double cache = 0.0;
      for (int i = 0; i < 4; ++i) cache += t.Z.matrix()(c, i) * weights[i][0];
      expect[c] = hp.alpha * cache + hp.logit_scale * testing::dot(x, testing::row(t.anchors.text.data(), c));
    }
    EXPECT_LE((krr_transform_logits(t.queries.row(q).transpose(), t.anchors, t.Z, hp, K) - expect)
                  .cwiseAbs()
                  .maxCoeff(),
              1e-10);
  }
}

TEST(ApeLogits, UnitScoresEqualTipAdapterExactly) {
  const Toy t = make_toy(8, 3, 3, 5);
  HyperParams hp;
  hp.alpha = 1.3;
  const CacheScores ones{Vector::Ones(9)};
  for (Eigen::Index q = 0; q < t.queries.rows(); ++q) {
    const Vector x = t.queries.row(q).transpose();
    EXPECT_EQ(ape_logits(x, t.anchors, t.Z, hp, ones), tip_adapter_logits(x, t.anchors, t.Z, hp));
  }
}

TEST(ApeLogits, DoubledScoresDoubleCacheTerm) {
  const Toy t = make_toy(9, 2, 2, 4);
  HyperParams hp;
  const Vector x = t.queries.row(0).transpose();
  const Vector text = hp.logit_scale * zero_shot_logits(x, t.anchors.text);
  const Vector one = ape_logits(x, t.anchors, t.Z, hp, CacheScores{Vector::Ones(4)}) - text;
  const Vector two = ape_logits(x, t.anchors, t.Z, hp, CacheScores{2.0 * Vector::Ones(4)}) - text;
  EXPECT_LE((two - 2.0 * one).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(ApeLogits, HandProductThroughTransform) {
  const OneHotLabels Z = one_hot(std::vector<int>{0, 1}, 2);
  Vector r(2);
  r << 1.0, 3.0;
  const TransformMatrix V = cache_transform(Z.matrix() * r.asDiagonal(), 1.0, 2);
  KernelVector k;
  k.values = Vector::Zero(4);
  k.values.head(2) << 0.5, 0.5;
  k.image_count = 2;
  const Vector got = V.apply(k);
  EXPECT_DOUBLE_EQ(got[0], 0.5);
  EXPECT_DOUBLE_EQ(got[1], 1.5);
}

TEST(ApeScores, ConfidentCorrectAnchorScoresOne) {
  const FeatureBundle im = testing::labeled_bundle(Matrix::Identity(2, 2), 2, {0, 1});
  const FeatureBundle tx = testing::text_bundle(Matrix::Identity(2, 2));
  const CacheScores s = ape_scores(im, tx, one_hot(im.labels(), 2), -1.0, 1e-3);
  EXPECT_EQ(s.r_fw[0], 1.0);
  EXPECT_EQ(s.r_fw[1], 1.0);
}

TEST(ApeScores, GammaZeroAllOnes) {
  const Toy t = make_toy(10, 4, 3, 6);
  const CacheScores s = ape_scores(t.anchors.image, t.anchors.text, t.Z, 0.0, 0.01);
  EXPECT_EQ(s.r_fw, Vector::Ones(12));
}

TEST(ApeScores, TwoClassHandSoftmax) {
  // softmax([1, 0] / tau) = [0.8, 0.2] when 1 / tau = ln 4.
  const double tau = 1.0 / std::log(4.0);
  const auto p = testing::softmax_ld({1.0L / tau, 0.0L});
  ASSERT_NEAR(static_cast<double>(p[0]), 0.8, 1e-15);
  const FeatureBundle im = testing::labeled_bundle(Vector::Unit(2, 0).transpose(), 2, {0});
  const FeatureBundle tx = testing::text_bundle(Matrix::Identity(2, 2));
  const CacheScores s = ape_scores(im, tx, one_hot(im.labels(), 2), -1.0, tau);
  EXPECT_NEAR(s.r_fw[0], 0.8, 1e-14);
}

TEST(ApeScores, PositiveAndFiniteForStrongNegativeGamma) {
  const Toy t = make_toy(11, 3, 2, 4);
  const CacheScores s = ape_scores(t.anchors.image, t.anchors.text, t.Z, -1.0, 0.01);
  EXPECT_TRUE((s.r_fw.array() > 0).all());
  EXPECT_TRUE(s.r_fw.allFinite());
}

TEST(ApeScores, OverflowIsDegenerateSoftmax) {
  Matrix im(1, 2);
  im << 1, 0;
  const FeatureBundle image = testing::labeled_bundle(im, 2, {1});
  const FeatureBundle tx = testing::text_bundle(Matrix::Identity(2, 2));
  EXPECT_EQ(code_of([&] { ape_scores(image, tx, one_hot(image.labels(), 2), 1000.0, 1e-3); }),
            ErrorCode::DegenerateSoftmax);
}

TEST(Transform, LinearInKernelVector) {
  Rng rng(12);
  const Matrix values = testing::random_unit_rows(rng, 3, 5);
  const TransformMatrix V = cache_transform(values, 42.0, 3);
  auto random_k = [&] {
    KernelVector k;
    k.values = Vector(8);
    for (Eigen::Index i = 0; i < 8; ++i) k.values[i] = rng.normal();
    k.image_count = 5;
    return k;
  };
  const KernelVector k1 = random_k();
  const KernelVector k2 = random_k();
  KernelVector mix = k1;
  mix.values = 0.3 * k1.values - 2.2 * k2.values;
  EXPECT_LE((V.apply(mix) - (0.3 * V.apply(k1) - 2.2 * V.apply(k2))).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Transform, WidthMismatch) {
  const TransformMatrix V = cache_transform(Matrix::Ones(2, 3), 1.0, 2);
  KernelVector k;
  k.values = Vector::Ones(4);
  k.image_count = 2;
  EXPECT_EQ(code_of([&] { V.apply(k); }), ErrorCode::DimensionMismatch);
}

TEST(SusX, GammaZeroIsAlphaScaledTipAdapterCache) {
  const Toy t = make_toy(13, 3, 2, 5);
  HyperParams hp;
  hp.alpha = 0.6;
  hp.gamma = 0.0;
  for (Eigen::Index q = 0; q < t.queries.rows(); ++q) {
    const Vector x = t.queries.row(q).transpose();
    EXPECT_LE((susx_logits(x, t.anchors, t.Z, hp) - tip_adapter_logits(x, t.anchors, t.Z, hp))
                  .cwiseAbs()
                  .maxCoeff(),
              1e-12);
  }
}

TEST(Logits, MissingBlocks) {
  const Toy t = make_toy(14, 2, 1, 3);
  AnchorSet text_only = t.anchors;
  text_only.image = FeatureBundle{};
  const HyperParams hp;
  EXPECT_EQ(code_of([&] { tip_adapter_logits(t.queries.row(0).transpose(), text_only, t.Z, hp); }),
            ErrorCode::MissingAnchors);
}

}  // namespace
}  // namespace rpft
