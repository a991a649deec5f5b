#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rpft/logits.hpp"
#include "rpft/methods.hpp"
#include "rpft/types.hpp"

namespace rpft {

/// Top-1 accuracy in percent. Throws MissingLabels on an unlabeled bundle.
double evaluate(const Scorer& scorer, const FeatureBundle& test);

/// Candidate values per hyperparameter. Points are enumerated with alpha as the
/// outermost loop, then beta, lambda, gamma, logit_scale; the first point with
/// the best validation accuracy wins. Axes a method does not use keep the
/// method config's own value.
struct SweepGrid {
  std::vector<double> alpha;
  std::vector<double> beta;
  std::vector<double> lambda;
  std::vector<double> gamma;
  std::vector<double> logit_scale;

  static SweepGrid defaults();
  /// Singleton grid holding exactly `hp`.
  static SweepGrid single(const HyperParams& hp);

  void validate() const;
  std::vector<HyperParams> points(const MethodConfig& base) const;
};

enum class AnchorMode { Shots, ClassMeans };

struct RunInputs {
  FeatureBundle train;  // labeled pool the episodes are drawn from
  FeatureBundle val;
  FeatureBundle test;
  FeatureBundle text;
  std::optional<FeatureBundle> support;  // external image anchors for SuS-X
  int shots = 16;
  AnchorMode anchor_mode = AnchorMode::Shots;
};

struct SeedResult {
  std::uint64_t seed = 0;
  double val_accuracy = 0.0;
  double test_accuracy = 0.0;
  int grid_index = 0;
  ScorerMetadata chosen;
};

struct RunResult {
  MethodName method = MethodName::ZeroShotClip;
  int shots = 0;
  int grid_points = 0;
  std::vector<SeedResult> seeds;
  double mean_accuracy = 0.0;
  bool leakage_warning = false;
  TrainConfig train;
  double wall_clock_seconds = 0.0;
};

struct DeltaRow {
  MethodName baseline = MethodName::ZeroShotClip;
  MethodName method = MethodName::ZeroShotClip;
  std::vector<double> per_seed;
  double mean = 0.0;
};

struct CompareResult {
  std::vector<std::uint64_t> seeds;
  std::vector<RunResult> runs;
  std::vector<DeltaRow> deltas;  // every later method minus the first
  double wall_clock_seconds = 0.0;
};

/// One episode: sample shots with `seed`, select hyperparameters on val, score test.
SeedResult run_seed(const MethodConfig& config, const SweepGrid& grid, const RunInputs& inputs,
                    std::uint64_t seed);

/// run_seed over every seed; `jobs` caps worker threads. Output does not depend on jobs.
RunResult sweep(const MethodConfig& config, const SweepGrid& grid, const RunInputs& inputs,
                std::span<const std::uint64_t> seeds, int jobs = 1);

/// Needs at least two methods.
CompareResult compare(std::span<const MethodConfig> methods, const SweepGrid& grid,
                      const RunInputs& inputs, std::span<const std::uint64_t> seeds, int jobs = 1);

/// Accuracy rounding used in every emitted document (2 decimals).
double round2(double value);

/// JSON documents; see README for the schema.
std::string to_json(const RunResult& result);
std::string to_json(const CompareResult& result);
/// CSV table: one row per method (per-seed columns then mean), then one row per delta.
std::string to_csv(const CompareResult& result);
std::string to_csv(const RunResult& result);

}  // namespace rpft
