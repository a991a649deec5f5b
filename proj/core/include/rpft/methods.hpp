#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rpft/anchors.hpp"
#include "rpft/kernels.hpp"
#include "rpft/logits.hpp"
#include "rpft/trainer.hpp"
#include "rpft/types.hpp"

namespace rpft {

enum class MethodName {
  ZeroShotClip,
  TipAdapter,
  TipAdapterKrr,
  SusX,
  SusXKrr,
  Ape,
  TextPlusCacheFusion,
  TextPlusKrrFusion,
  TipAdapterF,
  TipAdapterFKrr,
};

/// Static description of one adaptation method.
struct MethodInfo {
  MethodName name;
  std::string_view cli_name;
  std::string_view transform;  // the V(theta_log) it instantiates
  Fusion fusion;
  bool uses_image_anchors;
  bool uses_krr;
  bool trains;
  bool uses_gamma;
  std::vector<AnchorProvenance> allowed_provenance;
  HyperParams defaults;
  std::string_view note;
};

const MethodInfo& method_info(MethodName name);
std::span<const MethodInfo> all_methods();
/// Accepts the kebab-case CLI name. Throws InvalidArgument for unknown names.
MethodName parse_method(std::string_view cli_name);
std::string_view to_string(MethodName name);

struct MethodConfig {
  MethodName name = MethodName::TipAdapter;
  HyperParams hp;
  TrainConfig train;  // used by the trained methods only

  static MethodConfig defaults(MethodName name);
};

struct TrainSummary {
  int epochs = 0;
  int best_epoch = 0;
  double best_val_accuracy = -1.0;
  double final_loss = 0.0;
  double gradient_check_max_rel_error = 0.0;
};

struct ScorerMetadata {
  MethodName method = MethodName::ZeroShotClip;
  Fusion fusion = Fusion::Concat;
  HyperParams hp;
  std::optional<double> lambda;  // set when a KRR solve was performed
  double jitter = 0.0;
  int factorization_attempts = 0;
  std::optional<TrainSummary> training;
};

/// Immutable scorer for one composed method.
class MethodScorer final : public Scorer {
 public:
  MethodScorer(FeatureBundle image_keys, FeatureBundle text_anchors, KernelSpec image_kernel,
               TransformMatrix transform, ScorerMetadata meta);

  int class_count() const override { return static_cast<int>(text_.rows()); }
  Vector logits(const VectorRef& x) const override;

  KernelVector kernel_features(const VectorRef& x) const;
  const TransformMatrix& transform() const noexcept { return transform_; }
  const ScorerMetadata& metadata() const noexcept { return meta_; }
  const FeatureBundle& image_keys() const noexcept { return image_; }

 private:
  FeatureBundle image_;
  FeatureBundle text_;
  KernelSpec image_kernel_;
  TransformMatrix transform_;
  ScorerMetadata meta_;
};

/// Binds a method to its anchors. `episode` holds the labeled shots used for
/// training (trained methods only), `val` drives best-epoch selection.
/// Throws ConfigAnchorMismatch when the anchors do not satisfy the method.
MethodScorer compose_method(const MethodConfig& config, const AnchorSet& anchors,
                            const OneHotLabels& Z, const FeatureBundle& episode,
                            const FeatureBundle* val = nullptr);

}  // namespace rpft
