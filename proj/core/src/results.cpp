#include <cstdio>
#include <json.hpp>
#include <sstream>

#include "rpft/evaluation.hpp"

namespace rpft {
namespace {

using Json = nlohmann::ordered_json;

Json hyperparams_json(const HyperParams& hp) {
  Json j;
  j["alpha"] = hp.alpha;
  j["beta"] = hp.beta;
  j["lambda"] = hp.lambda;
  j["gamma"] = hp.gamma;
  j["logit_scale"] = hp.logit_scale;
  j["tau"] = hp.tau;
  return j;
}

Json train_config_json(const TrainConfig& t) {
  Json j;
  j["learning_rate"] = t.learning_rate;
  j["epochs"] = t.epochs;
  j["batch_size"] = t.batch_size;
  j["weight_decay"] = t.weight_decay;
  j["target"] = std::string(to_string(t.target));
  j["normalize_keys"] = t.normalize_keys;
  j["cosine_decay"] = t.cosine_decay;
  return j;
}

Json seed_json(const SeedResult& s) {
  Json j;
  j["seed"] = s.seed;
  j["val_accuracy"] = round2(s.val_accuracy);
  j["test_accuracy"] = round2(s.test_accuracy);
  j["grid_index"] = s.grid_index;
  j["hyperparams"] = hyperparams_json(s.chosen.hp);
  j["fusion"] = std::string(to_string(s.chosen.fusion));
  if (s.chosen.lambda) {
    Json krr;
    krr["lambda"] = *s.chosen.lambda;
    krr["jitter"] = s.chosen.jitter;
    krr["factorization_attempts"] = s.chosen.factorization_attempts;
    j["krr"] = krr;
  } else {
    j["krr"] = nullptr;
  }
  if (s.chosen.training) {
    const auto& t = *s.chosen.training;
    Json tr;
    tr["epochs"] = t.epochs;
    tr["best_epoch"] = t.best_epoch;
    tr["best_val_accuracy"] = round2(t.best_val_accuracy);
    tr["final_loss"] = t.final_loss;
    tr["gradient_check_max_rel_error"] = t.gradient_check_max_rel_error;
    j["training"] = tr;
  } else {
    j["training"] = nullptr;
  }
  return j;
}

Json run_json(const RunResult& r) {
  const MethodInfo& info = method_info(r.method);
  Json j;
  j["method"] = std::string(info.cli_name);
  j["transform"] = std::string(info.transform);
  if (!info.note.empty()) j["note"] = std::string(info.note);
  j["shots"] = r.shots;
  j["grid_points"] = r.grid_points;
  Json seeds = Json::array();
  for (const auto& s : r.seeds) seeds.push_back(s.seed);
  j["seeds"] = seeds;
  Json per_seed = Json::array();
  for (const auto& s : r.seeds) per_seed.push_back(seed_json(s));
  j["per_seed"] = per_seed;
  j["mean_accuracy"] = round2(r.mean_accuracy);
  j["leakage_warning"] = r.leakage_warning;
  if (info.trains) j["train_config"] = train_config_json(r.train);
  j["wall_clock_seconds"] = r.wall_clock_seconds;
  return j;
}

std::string fixed2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f", round2(v) + 0.0);
  return buf;
}

}  // namespace

std::string to_json(const RunResult& result) { return run_json(result).dump(2) + "\n"; }

std::string to_json(const CompareResult& result) {
  Json j;
  j["seeds"] = result.seeds;
  Json runs = Json::array();
  for (const auto& r : result.runs) runs.push_back(run_json(r));
  j["runs"] = runs;
  Json deltas = Json::array();
  for (const auto& d : result.deltas) {
    Json row;
    row["baseline"] = std::string(to_string(d.baseline));
    row["method"] = std::string(to_string(d.method));
    Json per_seed = Json::array();
    for (double v : d.per_seed) per_seed.push_back(round2(v));
    row["per_seed"] = per_seed;
    row["mean"] = round2(d.mean);
    deltas.push_back(row);
  }
  j["deltas"] = deltas;
  j["wall_clock_seconds"] = result.wall_clock_seconds;
  return j.dump(2) + "\n";
}

std::string to_csv(const CompareResult& result) {
  std::ostringstream out;
  out << "method";
  for (auto s : result.seeds) out << ",seed_" << s;
  out << ",mean\n";
  for (const auto& r : result.runs) {
    out << to_string(r.method);
    for (const auto& s : r.seeds) out << ',' << fixed2(s.test_accuracy);
    out << ',' << fixed2(r.mean_accuracy) << '\n';
  }
  for (const auto& d : result.deltas) {
    out << "delta:" << to_string(d.method) << "-" << to_string(d.baseline);
    for (double v : d.per_seed) out << ',' << (v >= 0 ? "+" : "") << fixed2(v);
    out << ',' << (d.mean >= 0 ? "+" : "") << fixed2(d.mean) << '\n';
  }
  return out.str();
}

std::string to_csv(const RunResult& result) {
  std::ostringstream out;
  out << "method";
  for (const auto& s : result.seeds) out << ",seed_" << s.seed;
  out << ",mean\n" << to_string(result.method);
  for (const auto& s : result.seeds) out << ',' << fixed2(s.test_accuracy);
  out << ',' << fixed2(result.mean_accuracy) << '\n';
  return out.str();
}

}  // namespace rpft
