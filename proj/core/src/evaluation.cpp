#include "rpft/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <iostream>
#include <thread>

#include "rpft/anchors.hpp"
#include "rpft/error.hpp"
#include "rpft/rng.hpp"

namespace rpft {
namespace {

template <typename Fn>
void parallel_for(std::size_t count, int jobs, Fn&& fn) {
  const std::size_t workers =
      std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, jobs)));
  std::vector<std::exception_ptr> errors(count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
  }
  // Report the failure of the lowest work item so errors are independent of scheduling.
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double sum = 0.0;
  for (double x : v) sum += x;
  return sum / static_cast<double>(v.size());
}

struct EpisodeAnchors {
  FeatureBundle episode;
  AnchorSet anchors;
  OneHotLabels Z;
};

EpisodeAnchors build_anchors(const MethodConfig& config, const RunInputs& inputs,
                             std::uint64_t seed) {
  const MethodInfo& info = method_info(config.name);
  const int C = static_cast<int>(inputs.text.rows());
  EpisodeAnchors out;
  const AnchorSet text = text_anchors_from_bundle(inputs.text, C);
  if (!info.uses_image_anchors) {
    out.anchors = combine(AnchorSet{}, text);
    return out;
  }
  const bool use_support = inputs.support.has_value() &&
                           (config.name == MethodName::SusX || config.name == MethodName::SusXKrr);
  AnchorSet image;
  if (use_support) {
    image = image_anchors_from_support(*inputs.support);
    out.episode = *inputs.support;
  } else {
    EpisodeSpec spec;
    spec.class_count = C;
    spec.shots = inputs.shots;
    spec.seed = seed;
    out.episode = sample_episode(inputs.train, spec);
    image = inputs.anchor_mode == AnchorMode::ClassMeans ? class_mean_anchors(out.episode)
                                                         : image_anchors_from_shots(out.episode);
  }
  out.anchors = combine(image, text);
  out.Z = one_hot(out.anchors.image.labels(), C);
  return out;
}

}  // namespace

double evaluate(const Scorer& scorer, const FeatureBundle& test) {
  const auto& labels = test.labels();
  if (test.empty()) return 0.0;
  std::size_t correct = 0;
  for (Eigen::Index i = 0; i < test.rows(); ++i) {
    if (scorer.predict(test.data().row(i).transpose()) == labels[static_cast<std::size_t>(i)]) {
      ++correct;
    }
  }
  return 100.0 * static_cast<double>(correct) / static_cast<double>(test.rows());
}

SweepGrid SweepGrid::defaults() {
  return SweepGrid{{0.01, 0.1, 0.5, 1.0, 2.0, 5.0},
                   {1.0, 3.0, 5.0, 7.0, 10.0},
                   {0.01, 0.1, 1.0, 10.0},
                   {-1.0, 0.0, 1.0},
                   {100.0}};
}

SweepGrid SweepGrid::single(const HyperParams& hp) {
  return SweepGrid{{hp.alpha}, {hp.beta}, {hp.lambda}, {hp.gamma}, {hp.logit_scale}};
}

void SweepGrid::validate() const {
  if (alpha.empty() || beta.empty() || lambda.empty() || gamma.empty() || logit_scale.empty()) {
    raise(ErrorCode::InvalidArgument, "every sweep axis needs at least one value");
  }
}

std::vector<HyperParams> SweepGrid::points(const MethodConfig& base) const {
  validate();
  const MethodInfo& info = method_info(base.name);
  const bool cached = info.uses_image_anchors;
  auto axis = [](bool used, const std::vector<double>& values, double fixed) {
    return used ? values : std::vector<double>{fixed};
  };
  const auto alphas = axis(cached, alpha, base.hp.alpha);
  const auto betas = axis(cached, beta, base.hp.beta);
  const auto lambdas = axis(info.uses_krr, lambda, base.hp.lambda);
  const auto gammas = axis(info.uses_gamma, gamma, base.hp.gamma);
  std::vector<HyperParams> out;
  for (double a : alphas) {
    for (double b : betas) {
      for (double l : lambdas) {
        for (double g : gammas) {
          for (double s : logit_scale) {
            HyperParams hp = base.hp;
            hp.alpha = a;
            hp.beta = b;
            hp.lambda = l;
            hp.gamma = g;
            hp.logit_scale = s;
            out.push_back(hp);
          }
        }
      }
    }
  }
  return out;
}

SeedResult run_seed(const MethodConfig& config, const SweepGrid& grid, const RunInputs& inputs,
                    std::uint64_t seed) {
  const EpisodeAnchors ea = build_anchors(config, inputs, seed);
  MethodConfig candidate = config;
  candidate.train.seed = mix_seed(seed, 101);

  SeedResult out;
  out.seed = seed;
  out.val_accuracy = -1.0;
  std::optional<MethodScorer> best;
  const auto points = grid.points(config);
  for (std::size_t i = 0; i < points.size(); ++i) {
    candidate.hp = points[i];
    MethodScorer scorer = compose_method(candidate, ea.anchors, ea.Z, ea.episode, &inputs.val);
    // Selection sees validation accuracy only.
    const double acc = evaluate(scorer, inputs.val);
    if (acc > out.val_accuracy) {
      out.val_accuracy = acc;
      out.grid_index = static_cast<int>(i);
      best.emplace(std::move(scorer));
    }
  }
  out.test_accuracy = evaluate(*best, inputs.test);
  out.chosen = best->metadata();
  return out;
}

RunResult sweep(const MethodConfig& config, const SweepGrid& grid, const RunInputs& inputs,
                std::span<const std::uint64_t> seeds, int jobs) {
  const auto start = std::chrono::steady_clock::now();
  if (seeds.empty()) raise(ErrorCode::InvalidArgument, "at least one seed is required");
  RunResult result;
  result.method = config.name;
  result.shots = inputs.shots;
  result.train = config.train;
  result.grid_points = static_cast<int>(grid.points(config).size());
  result.leakage_warning = inputs.val == inputs.test;
  if (result.leakage_warning) {
    std::cerr << "warning: validation and test bundles are identical; "
                 "selected hyperparameters are fitted to the test set\n";
  }
  result.seeds.resize(seeds.size());
  parallel_for(seeds.size(), jobs,
               [&](std::size_t i) { result.seeds[i] = run_seed(config, grid, inputs, seeds[i]); });
  std::vector<double> accs;
  for (const auto& s : result.seeds) accs.push_back(s.test_accuracy);
  result.mean_accuracy = mean_of(accs);
  result.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

CompareResult compare(std::span<const MethodConfig> methods, const SweepGrid& grid,
                      const RunInputs& inputs, std::span<const std::uint64_t> seeds, int jobs) {
  const auto start = std::chrono::steady_clock::now();
  if (methods.size() < 2) raise(ErrorCode::InvalidArgument, "compare needs at least two methods");
  if (seeds.empty()) raise(ErrorCode::InvalidArgument, "at least one seed is required");

  CompareResult out;
  out.seeds.assign(seeds.begin(), seeds.end());
  const std::size_t S = seeds.size();
  std::vector<SeedResult> cells(methods.size() * S);
  std::vector<double> seconds(cells.size(), 0.0);
  parallel_for(cells.size(), jobs, [&](std::size_t i) {
    const auto cell_start = std::chrono::steady_clock::now();
    cells[i] = run_seed(methods[i / S], grid, inputs, seeds[i % S]);
    seconds[i] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - cell_start).count();
  });

  const bool leak = inputs.val == inputs.test;
  if (leak) {
    std::cerr << "warning: validation and test bundles are identical; "
                 "selected hyperparameters are fitted to the test set\n";
  }
  for (std::size_t m = 0; m < methods.size(); ++m) {
    RunResult r;
    r.method = methods[m].name;
    r.shots = inputs.shots;
    r.train = methods[m].train;
    r.grid_points = static_cast<int>(grid.points(methods[m]).size());
    r.leakage_warning = leak;
    std::vector<double> accs;
    for (std::size_t s = 0; s < S; ++s) {
      r.seeds.push_back(cells[m * S + s]);
      accs.push_back(cells[m * S + s].test_accuracy);
      r.wall_clock_seconds += seconds[m * S + s];
    }
    r.mean_accuracy = mean_of(accs);
    out.runs.push_back(std::move(r));
  }
  for (std::size_t m = 1; m < methods.size(); ++m) {
    DeltaRow d;
    d.baseline = out.runs.front().method;
    d.method = out.runs[m].method;
    for (std::size_t s = 0; s < S; ++s) {
      d.per_seed.push_back(out.runs[m].seeds[s].test_accuracy -
                           out.runs.front().seeds[s].test_accuracy);
    }
    d.mean = mean_of(d.per_seed);
    out.deltas.push_back(std::move(d));
  }
  out.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

double round2(double value) { return std::round(value * 100.0) / 100.0; }

}  // namespace rpft
