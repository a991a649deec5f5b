#include "rpft/synthetic.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "rpft/error.hpp"
#include "rpft/rng.hpp"

namespace rpft {
namespace {

std::vector<std::string> class_names(int C) {
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(C));
  for (int c = 0; c < C; ++c) names.push_back("class_" + std::to_string(c));
  return names;
}

FeatureBundle draw_split(const Matrix& centers, int per_class, double concentration,
                         std::uint64_t seed) {
  const auto C = centers.rows();
  const auto d = centers.cols();
  Rng rng(seed);
  const double noise_scale =
      std::isinf(concentration) ? 0.0 : 1.0 / (concentration * std::sqrt(static_cast<double>(d)));
  Matrix data(C * per_class, d);
  std::vector<int> labels;
  labels.reserve(static_cast<std::size_t>(C * per_class));
  Eigen::Index row = 0;
  for (Eigen::Index c = 0; c < C; ++c) {
    for (int i = 0; i < per_class; ++i, ++row) {
      Vector v = centers.row(c).transpose();
      for (Eigen::Index j = 0; j < d; ++j) v[j] += noise_scale * rng.normal();
      data.row(row) = v.normalized().transpose();
      labels.push_back(static_cast<int>(c));
    }
  }
  return FeatureBundle(BundleParts{std::move(data), FeatureKind::Image, static_cast<int>(C),
                                   std::move(labels), class_names(static_cast<int>(C)), true});
}

}  // namespace

void SyntheticSpec::validate() const {
  if (classes < 1 || dim < 1) raise(ErrorCode::InvalidArgument, "classes and dim must be >= 1");
  if (train_per_class < 0 || val_per_class < 0 || test_per_class < 0) {
    raise(ErrorCode::InvalidArgument, "per-class counts must be >= 0");
  }
  if (!(concentration > 0.0)) raise(ErrorCode::InvalidArgument, "concentration must be > 0");
}

SyntheticData gen_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  Rng center_rng(mix_seed(spec.seed, 0));
  Matrix centers(spec.classes, spec.dim);
  for (int c = 0; c < spec.classes; ++c) {
    Vector v(spec.dim);
    do {
      for (int j = 0; j < spec.dim; ++j) v[j] = center_rng.normal();
    } while (v.norm() < 1e-12);
    centers.row(c) = v.normalized().transpose();
  }
  SyntheticData out;
  out.train = draw_split(centers, spec.train_per_class, spec.concentration, mix_seed(spec.seed, 1));
  out.val = draw_split(centers, spec.val_per_class, spec.concentration, mix_seed(spec.seed, 2));
  out.test = draw_split(centers, spec.test_per_class, spec.concentration, mix_seed(spec.seed, 3));
  out.text = FeatureBundle(BundleParts{centers, FeatureKind::Text, spec.classes, std::nullopt,
                                       class_names(spec.classes), true});
  return out;
}

}  // namespace rpft
