#include "cli.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <sstream>

#include "rpft/bundle_io.hpp"
#include "rpft/error.hpp"
#include "rpft/evaluation.hpp"
#include "rpft/methods.hpp"
#include "rpft/rng.hpp"
#include "rpft/synthetic.hpp"
#include "rpft/trainer.hpp"

namespace rpft::cli {
namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

struct DataFlags {
  std::string train, val, test, text, support;
  int shots = 16;
  std::string anchor_mode = "shots";
};

struct HyperFlags {
  std::optional<double> alpha, beta, lambda, gamma, logit_scale, tau;
};

struct TrainFlags {
  double lr = 1e-3;
  int epochs = 20;
  int batch_size = 32;
  double weight_decay = 0.0;
  std::string target = "keys";
  bool normalize_keys = false;
  bool cosine_decay = false;
};

struct Options {
  DataFlags data;
  HyperFlags hyper;
  TrainFlags training;
  std::string method;
  std::vector<std::string> methods;
  std::optional<std::uint64_t> seed;
  std::vector<std::uint64_t> seeds;
  std::string grid;
  std::string out;
  std::string format = "json";
  int jobs = 1;
  bool verbose = false;

  // gen-synthetic
  int classes = 10;
  int dim = 64;
  std::optional<int> val_per_class;
  int test_per_class = 50;
  double concentration = SyntheticSpec{}.concentration;
  bool force = false;

  // gradcheck
  int gc_anchors = 6;
  int gc_dim = 8;
  int gc_classes = 3;
  int gc_batch = 4;
  double gc_alpha = 1.0;
  double gc_beta = 5.0;
  bool break_gradient = false;

  // inspect
  std::string bundle;
};

std::string method_table() {
  std::ostringstream out;
  out << "Methods (--method / --methods):\n";
  for (const auto& m : all_methods()) {
    out << "  " << m.cli_name;
    for (std::size_t pad = m.cli_name.size(); pad < 20; ++pad) out << ' ';
    out << m.transform << '\n';
  }
  return out.str();
}

void add_data_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--train", o.data.train, "Labeled training pool bundle")->required();
  cmd->add_option("--val", o.data.val, "Validation bundle (hyperparameter selection)")->required();
  cmd->add_option("--test", o.data.test, "Test bundle")->required();
  cmd->add_option("--text-anchors", o.data.text, "Text bundle, one row per class")->required();
  cmd->add_option("--support", o.data.support, "External support bundle (sus-x, sus-x-krr)");
  cmd->add_option("--shots", o.data.shots, "Shots per class")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--anchor-mode", o.data.anchor_mode, "Image anchors: shots | class-means")
      ->check(CLI::IsMember({"shots", "class-means"}))
      ->capture_default_str();
}

void add_seed_flags(CLI::App* cmd, Options& o) {
  auto* seed = cmd->add_option("--seed", o.seed, "Single episode seed");
  auto* seeds = cmd->add_option("--seeds", o.seeds, "Comma-separated episode seeds")->delimiter(',');
  seed->excludes(seeds);
}

void add_hyper_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--alpha", o.hyper.alpha, "Cache/KRR mixing weight");
  cmd->add_option("--beta", o.hyper.beta, "Gaussian kernel width");
  cmd->add_option("--lambda", o.hyper.lambda, "Ridge penalty");
  cmd->add_option("--gamma", o.hyper.gamma, "Divergence sharpness");
  cmd->add_option("--logit-scale", o.hyper.logit_scale, "Scale on text logits");
  cmd->add_option("--tau", o.hyper.tau, "Softmax temperature for divergence terms");
}

void add_train_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--lr", o.training.lr, "Learning rate (trained methods)")->capture_default_str();
  cmd->add_option("--epochs", o.training.epochs, "Epochs (trained methods)")->capture_default_str();
  cmd->add_option("--batch-size", o.training.batch_size, "Mini-batch size")->capture_default_str();
  cmd->add_option("--weight-decay", o.training.weight_decay, "Weight decay")->capture_default_str();
  cmd->add_option("--train-target", o.training.target, "keys | cache-scores | both")
      ->check(CLI::IsMember({"keys", "cache-scores", "both"}))
      ->capture_default_str();
  cmd->add_flag("--normalize-keys", o.training.normalize_keys, "Re-normalize keys after each step");
  cmd->add_flag("--cosine-decay", o.training.cosine_decay, "Cosine learning-rate decay");
}

void add_output_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--out", o.out, "Output file (default: stdout)");
  cmd->add_option("--format", o.format, "json | csv")
      ->check(CLI::IsMember({"json", "csv"}))
      ->capture_default_str();
  cmd->add_option("--jobs", o.jobs, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
}

std::vector<std::uint64_t> resolve_seeds(const Options& o) {
  if (o.seed) return {*o.seed};
  if (!o.seeds.empty()) return o.seeds;
  return {1};
}

MethodConfig make_config(const std::string& name, const Options& o) {
  MethodConfig c = MethodConfig::defaults(parse_method(name));
  if (o.hyper.alpha) c.hp.alpha = *o.hyper.alpha;
  if (o.hyper.beta) c.hp.beta = *o.hyper.beta;
  if (o.hyper.lambda) c.hp.lambda = *o.hyper.lambda;
  if (o.hyper.gamma) c.hp.gamma = *o.hyper.gamma;
  if (o.hyper.logit_scale) c.hp.logit_scale = *o.hyper.logit_scale;
  if (o.hyper.tau) c.hp.tau = *o.hyper.tau;
  c.hp.validate();
  c.train.learning_rate = o.training.lr;
  c.train.epochs = o.training.epochs;
  c.train.batch_size = o.training.batch_size;
  c.train.weight_decay = o.training.weight_decay;
  c.train.normalize_keys = o.training.normalize_keys;
  c.train.cosine_decay = o.training.cosine_decay;
  c.train.target = o.training.target == "both"           ? TrainTarget::Both
                   : o.training.target == "cache-scores" ? TrainTarget::CacheScores
                                                          : TrainTarget::Keys;
  c.train.validate();
  return c;
}

SweepGrid load_grid(const std::string& path) {
  SweepGrid grid = SweepGrid::defaults();
  if (path.empty()) return grid;
  std::ifstream in(path);
  if (!in) raise(ErrorCode::IoFailure, "cannot open grid file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorCode::InvalidArgument, "grid file is not valid JSON: " + std::string(e.what()));
  }
  auto read_axis = [&](const char* key, std::vector<double>& axis) {
    if (!j.contains(key)) return;
    try {
      axis = j.at(key).get<std::vector<double>>();
    } catch (const nlohmann::json::exception&) {
      raise(ErrorCode::InvalidArgument, std::string("grid axis '") + key + "' must be a number list");
    }
  };
  for (const auto& [key, _] : j.items()) {
    if (key != "alpha" && key != "beta" && key != "lambda" && key != "gamma" &&
        key != "logit_scale") {
      raise(ErrorCode::InvalidArgument, "unknown grid axis '" + key + "'");
    }
  }
  read_axis("alpha", grid.alpha);
  read_axis("beta", grid.beta);
  read_axis("lambda", grid.lambda);
  read_axis("gamma", grid.gamma);
  read_axis("logit_scale", grid.logit_scale);
  grid.validate();
  return grid;
}

RunInputs load_inputs(const Options& o) {
  RunInputs in;
  in.train = load_bundle(o.data.train);
  in.val = load_bundle(o.data.val);
  in.test = load_bundle(o.data.test);
  in.text = load_bundle(o.data.text);
  if (!o.data.support.empty()) in.support = load_bundle(o.data.support);
  in.shots = o.data.shots;
  in.anchor_mode = o.data.anchor_mode == "class-means" ? AnchorMode::ClassMeans : AnchorMode::Shots;
  return in;
}

Json grid_json(const SweepGrid& g) {
  Json j;
  j["alpha"] = g.alpha;
  j["beta"] = g.beta;
  j["lambda"] = g.lambda;
  j["gamma"] = g.gamma;
  j["logit_scale"] = g.logit_scale;
  return j;
}

// Everything that determines the result; --jobs and --out are deliberately absent
// because they do not change it.
Json invocation_json(const std::string& subcommand, const Options& o, const SweepGrid* grid) {
  Json j;
  j["subcommand"] = subcommand;
  if (!o.method.empty()) j["method"] = o.method;
  if (!o.methods.empty()) j["methods"] = o.methods;
  Json data;
  data["train"] = o.data.train;
  data["val"] = o.data.val;
  data["test"] = o.data.test;
  data["text_anchors"] = o.data.text;
  data["support"] = o.data.support.empty() ? Json(nullptr) : Json(o.data.support);
  data["shots"] = o.data.shots;
  data["anchor_mode"] = o.data.anchor_mode;
  j["data"] = data;
  j["seeds"] = resolve_seeds(o);
  Json hp;
  auto put = [&](const char* key, const std::optional<double>& v) {
    hp[key] = v ? Json(*v) : Json(nullptr);
  };
  put("alpha", o.hyper.alpha);
  put("beta", o.hyper.beta);
  put("lambda", o.hyper.lambda);
  put("gamma", o.hyper.gamma);
  put("logit_scale", o.hyper.logit_scale);
  put("tau", o.hyper.tau);
  j["hyperparam_flags"] = hp;
  Json tr;
  tr["lr"] = o.training.lr;
  tr["epochs"] = o.training.epochs;
  tr["batch_size"] = o.training.batch_size;
  tr["weight_decay"] = o.training.weight_decay;
  tr["train_target"] = o.training.target;
  tr["normalize_keys"] = o.training.normalize_keys;
  tr["cosine_decay"] = o.training.cosine_decay;
  j["train_flags"] = tr;
  if (grid) {
    j["grid_file"] = o.grid.empty() ? Json(nullptr) : Json(o.grid);
    j["grid"] = grid_json(*grid);
  }
  return j;
}

void emit(const std::string& text, const Options& o, std::ostream& out) {
  if (o.out.empty()) {
    out << text;
    return;
  }
  std::ofstream file(o.out, std::ios::binary | std::ios::trunc);
  if (!file) raise(ErrorCode::IoFailure, "cannot write " + o.out);
  file << text;
}

std::string with_invocation(const std::string& document, Json invocation) {
  Json doc = Json::parse(document);
  Json out;
  out["invocation"] = std::move(invocation);
  for (auto& [key, value] : doc.items()) out[key] = value;
  return out.dump(2) + "\n";
}

int cmd_gen_synthetic(const Options& o, std::ostream& out) {
  SyntheticSpec spec;
  spec.classes = o.classes;
  spec.dim = o.dim;
  spec.train_per_class = o.data.shots;
  spec.val_per_class = o.val_per_class.value_or(o.data.shots);
  spec.test_per_class = o.test_per_class;
  spec.concentration = o.concentration;
  spec.seed = o.seed.value_or(1);
  const SyntheticData data = gen_synthetic(spec);
  const fs::path root = o.out;
  save_bundle(data.train, root / "train", o.force);
  save_bundle(data.val, root / "val", o.force);
  save_bundle(data.test, root / "test", o.force);
  save_bundle(data.text, root / "text", o.force);
  Json j;
  j["subcommand"] = "gen-synthetic";
  j["classes"] = spec.classes;
  j["dim"] = spec.dim;
  j["train_per_class"] = spec.train_per_class;
  j["val_per_class"] = spec.val_per_class;
  j["test_per_class"] = spec.test_per_class;
  j["concentration"] = spec.concentration;
  j["seed"] = spec.seed;
  j["bundles"] = {(root / "train").string(), (root / "val").string(), (root / "test").string(),
                  (root / "text").string()};
  out << j.dump(2) << "\n";
  return kExitOk;
}

int cmd_run(const Options& o, bool use_grid, const std::string& name, std::ostream& out) {
  const MethodConfig config = make_config(o.method, o);
  const SweepGrid grid = use_grid ? load_grid(o.grid) : SweepGrid::single(config.hp);
  const RunInputs inputs = load_inputs(o);
  const auto seeds = resolve_seeds(o);
  const RunResult result = sweep(config, grid, inputs, seeds, o.jobs);
  if (o.format == "csv") {
    emit(to_csv(result), o, out);
  } else {
    emit(with_invocation(to_json(result), invocation_json(name, o, &grid)), o, out);
  }
  return kExitOk;
}

int cmd_compare(const Options& o, std::ostream& out) {
  if (o.methods.size() < 2) raise(ErrorCode::InvalidArgument, "--methods needs at least two names");
  std::vector<MethodConfig> configs;
  for (const auto& m : o.methods) configs.push_back(make_config(m, o));
  const SweepGrid grid = load_grid(o.grid);
  const RunInputs inputs = load_inputs(o);
  const auto seeds = resolve_seeds(o);
  const CompareResult result = compare(configs, grid, inputs, seeds, o.jobs);
  if (o.format == "csv") {
    emit(to_csv(result), o, out);
  } else {
    emit(with_invocation(to_json(result), invocation_json("compare", o, &grid)), o, out);
  }
  return kExitOk;
}

int cmd_gradcheck(const Options& o, std::ostream& out) {
  if (o.gc_anchors < 1 || o.gc_dim < 1 || o.gc_classes < 1 || o.gc_batch < 1) {
    raise(ErrorCode::InvalidArgument, "gradcheck sizes must be positive");
  }
  Rng rng(o.seed.value_or(1));
  auto unit_rows = [&](int rows, int cols) {
    Matrix m(rows, cols);
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < cols; ++j) m(i, j) = rng.normal();
      m.row(i).normalize();
    }
    return m;
  };
  CacheModel model;
  model.keys = unit_rows(o.gc_anchors, o.gc_dim);
  model.text = unit_rows(o.gc_classes, o.gc_dim);
  model.values = Matrix::Zero(o.gc_classes, o.gc_anchors);
  for (int i = 0; i < o.gc_anchors; ++i) model.values(i % o.gc_classes, i) = 1.0;
  model.scores = Vector(o.gc_anchors);
  for (int i = 0; i < o.gc_anchors; ++i) model.scores[i] = 0.5 + rng.uniform01();
  model.alpha = o.gc_alpha;
  model.beta = o.gc_beta;
  model.logit_scale = 10.0;
  const Matrix batch = unit_rows(o.gc_batch, o.gc_dim);
  std::vector<int> labels(static_cast<std::size_t>(o.gc_batch));
  for (int b = 0; b < o.gc_batch; ++b) {
    labels[static_cast<std::size_t>(b)] = static_cast<int>(rng.uniform_index(o.gc_classes));
  }

  Matrix g_keys = grad_keys(model, batch, labels);
  Vector g_scores = grad_cache_scores(model, batch, labels);
  if (o.break_gradient) {
    // Negative control: drop the beta factor from one key row and bias one score.
    g_keys.row(0) /= model.beta;
    g_scores[0] += 0.1 * std::max(g_scores.cwiseAbs().maxCoeff(), 1e-3);
  }
  const double keys_err = relative_error(g_keys, numeric_grad_keys(model, batch, labels));
  const double scores_err =
      relative_error(g_scores, numeric_grad_cache_scores(model, batch, labels));
  constexpr double kTolerance = 1e-4;
  const bool pass = keys_err <= kTolerance && scores_err <= kTolerance;

  Json j;
  j["subcommand"] = "gradcheck";
  j["seed"] = o.seed.value_or(1);
  j["anchors"] = o.gc_anchors;
  j["dim"] = o.gc_dim;
  j["classes"] = o.gc_classes;
  j["batch"] = o.gc_batch;
  j["alpha"] = o.gc_alpha;
  j["beta"] = o.gc_beta;
  j["step"] = 1e-4;
  j["break_gradient"] = o.break_gradient;
  j["keys_max_rel_error"] = keys_err;
  j["cache_scores_max_rel_error"] = scores_err;
  j["tolerance"] = kTolerance;
  j["pass"] = pass;
  out << j.dump(2) << "\n";
  if (!pass) raise(ErrorCode::DivergedLoss, "gradient check exceeded tolerance");
  return kExitOk;
}

int cmd_inspect(const Options& o, std::ostream& out) {
  const LoadedBundle loaded = load_bundle_with_checksums(o.bundle);
  const FeatureBundle& b = loaded.bundle;
  Json j;
  j["path"] = o.bundle;
  j["kind"] = std::string(to_string(b.kind()));
  j["n"] = b.rows();
  j["d"] = b.dim();
  j["class_count"] = b.class_count();
  j["has_labels"] = b.has_labels();
  j["l2_normalized"] = b.l2_normalized();
  j["features_crc32"] = loaded.features_crc32;
  j["labels_crc32"] = loaded.labels_crc32;
  if (!b.empty()) {
    const Vector norms = b.data().rowwise().norm();
    j["row_norm_min"] = norms.minCoeff();
    j["row_norm_max"] = norms.maxCoeff();
  }
  if (b.has_labels()) {
    std::vector<int> counts(static_cast<std::size_t>(b.class_count()), 0);
    for (int y : b.labels()) ++counts[static_cast<std::size_t>(y)];
    j["per_class_counts"] = counts;
  }
  out << j.dump(2) << "\n";
  return kExitOk;
}

int exit_code_for(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::Usage: return kExitUsage;
    case ErrorCategory::Data: return kExitData;
    case ErrorCategory::Numerical: return kExitNumerical;
  }
  return kExitData;
}

void report_error(std::ostream& err, std::string_view code, const std::string& message) {
  Json j;
  j["error"] = std::string(code);
  j["message"] = message;
  err << j.dump() << "\n";
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Kernel-method adapters for few-shot classification over precomputed embeddings",
               "rpft"};
  app.require_subcommand(1);
  app.footer(method_table());
  app.add_flag("-v,--verbose", o.verbose, "Verbose diagnostics on stderr");

  auto* gen = app.add_subcommand("gen-synthetic", "Write synthetic train/val/test/text bundles");
  gen->add_option("--classes", o.classes, "Number of classes")->check(CLI::PositiveNumber)->capture_default_str();
  gen->add_option("--dim", o.dim, "Embedding dimension")->check(CLI::PositiveNumber)->capture_default_str();
  gen->add_option("--shots", o.data.shots, "Training rows per class")->check(CLI::PositiveNumber)->capture_default_str();
  gen->add_option("--val-per-class", o.val_per_class, "Validation rows per class (default: --shots)");
  gen->add_option("--test-per-class", o.test_per_class, "Test rows per class")->capture_default_str();
  gen->add_option("--concentration", o.concentration, "Cluster tightness (> 0)")->capture_default_str();
  gen->add_option("--seed", o.seed, "Generator seed");
  gen->add_option("--out", o.out, "Output directory")->required();
  gen->add_flag("--force", o.force, "Overwrite existing bundles");

  auto* run = app.add_subcommand("run", "Run one method with fixed hyperparameters");
  run->add_option("--method", o.method, "Method name")->required();
  add_data_flags(run, o);
  add_seed_flags(run, o);
  add_hyper_flags(run, o);
  add_train_flags(run, o);
  add_output_flags(run, o);

  auto* sweep_cmd = app.add_subcommand("sweep", "Select hyperparameters on the validation split");
  sweep_cmd->add_option("--method", o.method, "Method name")->required();
  sweep_cmd->add_option("--grid", o.grid, "Grid JSON file (default grid when omitted)");
  add_data_flags(sweep_cmd, o);
  add_seed_flags(sweep_cmd, o);
  add_hyper_flags(sweep_cmd, o);
  add_train_flags(sweep_cmd, o);
  add_output_flags(sweep_cmd, o);

  auto* cmp = app.add_subcommand("compare", "Sweep several methods and report deltas vs the first");
  cmp->add_option("--methods", o.methods, "Comma-separated method names")->delimiter(',')->required();
  cmp->add_option("--grid", o.grid, "Grid JSON file (default grid when omitted)");
  add_data_flags(cmp, o);
  add_seed_flags(cmp, o);
  add_hyper_flags(cmp, o);
  add_train_flags(cmp, o);
  add_output_flags(cmp, o);

  auto* gc = app.add_subcommand("gradcheck", "Check trainer gradients against finite differences");
  gc->add_option("--seed", o.seed, "Toy instance seed");
  gc->add_option("--anchors", o.gc_anchors, "Number of keys")->capture_default_str();
  gc->add_option("--dim", o.gc_dim, "Embedding dimension")->capture_default_str();
  gc->add_option("--classes", o.gc_classes, "Number of classes")->capture_default_str();
  gc->add_option("--batch", o.gc_batch, "Batch size")->capture_default_str();
  gc->add_option("--alpha", o.gc_alpha, "Cache weight")->capture_default_str();
  gc->add_option("--beta", o.gc_beta, "Gaussian width")->capture_default_str();
  gc->add_flag("--break-gradient", o.break_gradient, "Corrupt the analytic gradient (must fail)");

  auto* inspect = app.add_subcommand("inspect", "Summarize a bundle without modifying it");
  inspect->add_option("--bundle", o.bundle, "Bundle directory")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    report_error(err, "UsageError", e.what());
    return kExitUsage;
  }

  try {
    if (*gen) return cmd_gen_synthetic(o, out);
    if (*run) return cmd_run(o, false, "run", out);
    if (*sweep_cmd) return cmd_run(o, true, "sweep", out);
    if (*cmp) return cmd_compare(o, out);
    if (*gc) return cmd_gradcheck(o, out);
    if (*inspect) return cmd_inspect(o, out);
  } catch (const Error& e) {
    report_error(err, to_string(e.code()), e.what());
    return exit_code_for(e.category());
  } catch (const std::exception& e) {
    report_error(err, "DataError", e.what());
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace rpft::cli
