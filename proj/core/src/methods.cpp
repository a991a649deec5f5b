#include "rpft/methods.hpp"

#include <algorithm>
#include <array>
#include <string>

#include "rpft/error.hpp"
#include "rpft/krr.hpp"

namespace rpft {
namespace {

HyperParams prompt_style_defaults() {
  HyperParams hp;
  hp.alpha = 0.01;
  hp.beta = 5.0;
  hp.lambda = 0.1;
  return hp;
}

const std::vector<MethodInfo>& registry() {
  using P = AnchorProvenance;
  static const std::vector<MethodInfo> methods = {
      {MethodName::ZeroShotClip, "zero-shot-clip", "V = I over text cosines (n1 = 0)",
       Fusion::Concat, false, false, false, false, {}, HyperParams{}, ""},
      {MethodName::TipAdapter, "tip-adapter", "V = [alpha Z, I], Gaussian image kernel",
       Fusion::Concat, true, false, false, false, {P::LabeledShots, P::ClassMeans}, HyperParams{},
       ""},
      {MethodName::TipAdapterKrr, "tip-adapter-krr",
       "V = [alpha Z (K + lambda I)^-1, I], Gaussian image kernel", Fusion::Concat, true, true,
       false, false, {P::LabeledShots, P::ClassMeans}, HyperParams{}, ""},
      {MethodName::SusX, "sus-x", "V = [Z, I], calibrated Gaussian kernel on support anchors",
       Fusion::Concat, true, false, false, true, {P::ExternalSupport, P::LabeledShots},
       HyperParams{}, ""},
      {MethodName::SusXKrr, "sus-x-krr",
       "V = [Z (K + lambda I)^-1, I], calibrated Gaussian kernel on support anchors",
       Fusion::Concat, true, true, false, true, {P::ExternalSupport, P::LabeledShots},
       HyperParams{}, "K is the Gaussian Gram matrix of the support anchors"},
      {MethodName::Ape, "ape", "V = [alpha Z diag(R_FW), I], Gaussian image kernel",
       Fusion::Concat, true, false, false, true, {P::LabeledShots}, HyperParams{}, ""},
      {MethodName::TextPlusCacheFusion, "text-plus-cache", "V = alpha Z + I over fixed text anchors",
       Fusion::Sum, true, false, false, false, {P::LabeledShots, P::ClassMeans},
       prompt_style_defaults(), "fixed-anchor analogue: text anchors are not prompt-tuned"},
      {MethodName::TextPlusKrrFusion, "text-plus-krr",
       "V = alpha Z (K + lambda I)^-1 + I over fixed text anchors", Fusion::Sum, true, true, false,
       false, {P::LabeledShots, P::ClassMeans}, prompt_style_defaults(),
       "fixed-anchor analogue: text anchors are not prompt-tuned"},
      {MethodName::TipAdapterF, "tip-adapter-f", "V = [alpha Z, I], keys trained",
       Fusion::Concat, true, false, true, false, {P::LabeledShots}, HyperParams{}, ""},
      {MethodName::TipAdapterFKrr, "tip-adapter-f-krr",
       "V = [alpha Z (K0 + lambda I)^-1, I], keys trained", Fusion::Concat, true, true, true, false,
       {P::LabeledShots}, HyperParams{},
       "K0 is the Gram matrix of the initial keys; keys train against the fixed KRR values"},
  };
  return methods;
}

void mismatch(const std::string& what) { raise(ErrorCode::ConfigAnchorMismatch, what); }

struct KrrValues {
  Matrix values;
  double jitter = 0.0;
  int attempts = 0;
};

KrrValues krr_values(const FeatureBundle& image, const OneHotLabels& Z, const HyperParams& hp) {
  const KernelMatrix K = gram_matrix(image, cache_image_kernel(hp));
  const KrrSolution sol = solve(K, Z, hp.lambda);
  return {sol.coefficients().transpose(), sol.jitter(),
          static_cast<int>(sol.jitter_history().size())};
}

}  // namespace

const MethodInfo& method_info(MethodName name) {
  for (const auto& m : registry()) {
    if (m.name == name) return m;
  }
  raise(ErrorCode::InvalidArgument, "unknown method");
}

std::span<const MethodInfo> all_methods() { return registry(); }

MethodName parse_method(std::string_view cli_name) {
  for (const auto& m : registry()) {
    if (m.cli_name == cli_name) return m.name;
  }
  raise(ErrorCode::InvalidArgument, "unknown method '" + std::string(cli_name) + "'");
}

std::string_view to_string(MethodName name) { return method_info(name).cli_name; }

MethodConfig MethodConfig::defaults(MethodName name) {
  MethodConfig c;
  c.name = name;
  c.hp = method_info(name).defaults;
  return c;
}

MethodScorer::MethodScorer(FeatureBundle image_keys, FeatureBundle text_anchors,
                           KernelSpec image_kernel, TransformMatrix transform, ScorerMetadata meta)
    : image_(std::move(image_keys)),
      text_(std::move(text_anchors)),
      image_kernel_(std::move(image_kernel)),
      transform_(std::move(transform)),
      meta_(std::move(meta)) {}

KernelVector MethodScorer::kernel_features(const VectorRef& x) const {
  return kernel_vector(x, image_, text_, image_kernel_, KernelSpec::linear());
}

Vector MethodScorer::logits(const VectorRef& x) const {
  return transform_.apply(kernel_features(x));
}

MethodScorer compose_method(const MethodConfig& config, const AnchorSet& anchors,
                            const OneHotLabels& Z, const FeatureBundle& episode,
                            const FeatureBundle* val) {
  const MethodInfo& info = method_info(config.name);
  const HyperParams& hp = config.hp;
  hp.validate();

  if (anchors.text.empty()) mismatch(std::string(info.cli_name) + " needs text anchors");
  const int C = static_cast<int>(anchors.text.rows());

  ScorerMetadata meta;
  meta.method = config.name;
  meta.fusion = info.fusion;
  meta.hp = hp;

  if (!info.uses_image_anchors) {
    return MethodScorer(FeatureBundle(), anchors.text, KernelSpec::linear(),
                        cache_transform(Matrix(C, 0), hp.logit_scale, C, info.fusion), meta);
  }

  if (anchors.image.empty()) mismatch(std::string(info.cli_name) + " needs image anchors");
  if (std::find(info.allowed_provenance.begin(), info.allowed_provenance.end(),
                anchors.provenance) == info.allowed_provenance.end()) {
    mismatch(std::string(info.cli_name) + " does not accept " +
             std::string(to_string(anchors.provenance)) + " image anchors");
  }
  if (Z.size() != anchors.image_count()) {
    raise(ErrorCode::DimensionMismatch, "label matrix width does not match the image anchors");
  }
  if (Z.class_count() != C) mismatch("label matrix and text anchors disagree on class count");
  if (Z.labels() != anchors.image.labels()) mismatch("label matrix is not the image anchors' labels");

  switch (config.name) {
    case MethodName::TipAdapter:
    case MethodName::TextPlusCacheFusion:
      return MethodScorer(anchors.image, anchors.text, cache_image_kernel(hp),
                          cache_transform(hp.alpha * Z.matrix(), hp.logit_scale, C, info.fusion),
                          meta);
    case MethodName::TipAdapterKrr:
    case MethodName::TextPlusKrrFusion: {
      const KrrValues krr = krr_values(anchors.image, Z, hp);
      meta.lambda = hp.lambda;
      meta.jitter = krr.jitter;
      meta.factorization_attempts = krr.attempts;
      return MethodScorer(anchors.image, anchors.text, cache_image_kernel(hp),
                          cache_transform(hp.alpha * krr.values, hp.logit_scale, C, info.fusion),
                          meta);
    }
    case MethodName::SusX:
      return MethodScorer(anchors.image, anchors.text, calibrated_image_kernel(hp, anchors.text),
                          cache_transform(Z.matrix(), hp.logit_scale, C, info.fusion), meta);
    case MethodName::SusXKrr: {
      const KrrValues krr = krr_values(anchors.image, Z, hp);
      meta.lambda = hp.lambda;
      meta.jitter = krr.jitter;
      meta.factorization_attempts = krr.attempts;
      return MethodScorer(anchors.image, anchors.text, calibrated_image_kernel(hp, anchors.text),
                          cache_transform(krr.values, hp.logit_scale, C, info.fusion), meta);
    }
    case MethodName::Ape: {
      const CacheScores scores = ape_scores(anchors.image, anchors.text, Z, hp.gamma, hp.tau);
      const Matrix values = hp.alpha * (Z.matrix() * scores.r_fw.asDiagonal());
      return MethodScorer(anchors.image, anchors.text, cache_image_kernel(hp),
                          cache_transform(values, hp.logit_scale, C, info.fusion), meta);
    }
    case MethodName::TipAdapterF:
    case MethodName::TipAdapterFKrr: {
      Matrix values = Z.matrix();
      if (config.name == MethodName::TipAdapterFKrr) {
        const KrrValues krr = krr_values(anchors.image, Z, hp);
        values = krr.values;
        meta.lambda = hp.lambda;
        meta.jitter = krr.jitter;
        meta.factorization_attempts = krr.attempts;
      }
      const CacheModel init = make_cache_model(anchors, values, hp, cache_image_kernel(hp));
      const TrainReport report = train(config.train, l2_normalize_rows(episode), init, val);
      meta.training = TrainSummary{config.train.epochs, report.best_epoch, report.best_val_accuracy,
                                   report.loss_history.back(),
                                   report.initial_check.max_rel_error()};
      BundleParts keys = anchors.image.parts();
      keys.data = report.model.keys;
      keys.l2_normalized = config.train.normalize_keys;
      const Matrix trained_values =
          hp.alpha * (report.model.values * report.model.scores.asDiagonal());
      return MethodScorer(FeatureBundle(std::move(keys)), anchors.text, cache_image_kernel(hp),
                          cache_transform(trained_values, hp.logit_scale, C, info.fusion), meta);
    }
    case MethodName::ZeroShotClip:
      break;
  }
  raise(ErrorCode::InvalidArgument, "unhandled method");
}

}  // namespace rpft
