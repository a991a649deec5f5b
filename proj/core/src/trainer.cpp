#include "rpft/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>

#include "rpft/error.hpp"
#include "rpft/rng.hpp"

namespace rpft {
namespace {

const double kLogFloor = std::log(1e-12);

void require_batch(const CacheModel& model, const Matrix& batch, std::span<const int> labels) {
  if (static_cast<Eigen::Index>(labels.size()) != batch.rows()) {
    raise(ErrorCode::DimensionMismatch, "batch rows and labels differ in count");
  }
  if (batch.rows() == 0) raise(ErrorCode::InvalidArgument, "empty batch");
  if (batch.cols() != model.keys.cols()) {
    raise(ErrorCode::DimensionMismatch, "batch and keys differ in dimension");
  }
  for (int y : labels) {
    if (y < 0 || y >= model.class_count()) {
      raise(ErrorCode::LabelOutOfRange, "label " + std::to_string(y));
    }
  }
}

Vector softmax(const VectorRef& logits) {
  Vector p = (logits.array() - logits.maxCoeff()).exp();
  return p / p.sum();
}

// (p_b - e_{y_b}) / B mapped back through the cache values, one column per sample.
Matrix backprop_to_kernel(const CacheModel& model, const Matrix& batch, std::span<const int> labels,
                          Matrix& kernels) {
  const Eigen::Index B = batch.rows();
  Matrix upstream(model.keys.rows(), B);
  kernels.resize(model.keys.rows(), B);
  for (Eigen::Index b = 0; b < B; ++b) {
    const Vector x = batch.row(b).transpose();
    kernels.col(b) = model.kernel(x);
    const Vector logits = model.logits(x);
    const int y = labels[static_cast<std::size_t>(b)];
    const double top = logits.maxCoeff();
    const double log_norm = top + std::log((logits.array() - top).exp().sum());
    const double log_p = logits[y] - log_norm;
    if (log_p < kLogFloor) {
      // The floored loss is flat here.
      upstream.col(b).setZero();
      continue;
    }
    Vector g = softmax(logits);
    g[y] -= 1.0;
    upstream.col(b) = model.values.transpose() * (g / static_cast<double>(B));
  }
  return upstream;
}

}  // namespace

Vector CacheModel::kernel(const VectorRef& x) const {
  return (-beta * (1.0 - (keys * x).array())).exp().matrix();
}

Vector CacheModel::logits(const VectorRef& x) const {
  return logit_scale * (text * x) + alpha * (values * scores.cwiseProduct(kernel(x)));
}

CacheModel make_cache_model(const AnchorSet& anchors, const Matrix& values, const HyperParams& hp,
                            const KernelSpec& image_kernel) {
  const auto* gaussian = image_kernel.get_if<GaussianKernel>();
  if (!gaussian) raise(ErrorCode::KernelMismatch, "trainable cache requires a Gaussian image kernel");
  if (anchors.image.empty() || anchors.text.empty()) {
    raise(ErrorCode::MissingAnchors, "trainable cache requires both anchor blocks");
  }
  if (values.cols() != anchors.image_count() || values.rows() != anchors.text_count()) {
    raise(ErrorCode::DimensionMismatch, "cache values do not match the anchors");
  }
  CacheModel m;
  m.keys = anchors.image.data();
  m.scores = Vector::Ones(anchors.image_count());
  m.values = values;
  m.text = anchors.text.data();
  m.alpha = hp.alpha;
  m.beta = gaussian->beta;
  m.logit_scale = hp.logit_scale;
  return m;
}

double cross_entropy_loss(const Matrix& logits, std::span<const int> labels) {
  if (static_cast<Eigen::Index>(labels.size()) != logits.rows()) {
    raise(ErrorCode::DimensionMismatch, "logit rows and labels differ in count");
  }
  if (logits.rows() == 0) raise(ErrorCode::InvalidArgument, "empty batch");
  double total = 0.0;
  for (Eigen::Index b = 0; b < logits.rows(); ++b) {
    const int y = labels[static_cast<std::size_t>(b)];
    if (y < 0 || y >= logits.cols()) raise(ErrorCode::LabelOutOfRange, "label " + std::to_string(y));
    const auto row = logits.row(b);
    const double top = row.maxCoeff();
    const double log_norm = top + std::log((row.array() - top).exp().sum());
    total -= std::max(row[y] - log_norm, kLogFloor);
  }
  return total / static_cast<double>(logits.rows());
}

double model_loss(const CacheModel& model, const Matrix& batch, std::span<const int> labels) {
  require_batch(model, batch, labels);
  Matrix logits(batch.rows(), model.class_count());
  for (Eigen::Index b = 0; b < batch.rows(); ++b) {
    logits.row(b) = model.logits(batch.row(b).transpose()).transpose();
  }
  return cross_entropy_loss(logits, labels);
}

Matrix grad_keys(const CacheModel& model, const Matrix& batch, std::span<const int> labels) {
  require_batch(model, batch, labels);
  Matrix kernels;
  const Matrix upstream = backprop_to_kernel(model, batch, labels, kernels);
  // d logits / d A_i = alpha * values[:, i] * r_i * beta * k_i(x) * x^T
  Matrix weight = upstream.cwiseProduct(kernels).array().colwise() * model.scores.array();
  weight *= model.alpha * model.beta;
  return weight * batch;
}

Vector grad_cache_scores(const CacheModel& model, const Matrix& batch, std::span<const int> labels) {
  require_batch(model, batch, labels);
  Matrix kernels;
  const Matrix upstream = backprop_to_kernel(model, batch, labels, kernels);
  return model.alpha * upstream.cwiseProduct(kernels).rowwise().sum();
}

double relative_error(const Eigen::Ref<const Matrix>& analytic,
                      const Eigen::Ref<const Matrix>& numeric, double floor) {
  if (analytic.rows() != numeric.rows() || analytic.cols() != numeric.cols()) {
    raise(ErrorCode::DimensionMismatch, "gradient shapes differ");
  }
  if (analytic.size() == 0) return 0.0;
  const double scale = std::max({analytic.cwiseAbs().maxCoeff(), numeric.cwiseAbs().maxCoeff(),
                                 floor});
  return (analytic - numeric).cwiseAbs().maxCoeff() / scale;
}

Matrix numeric_grad_keys(const CacheModel& model, const Matrix& batch, std::span<const int> labels,
                         double h) {
  CacheModel probe = model;
  Matrix out(model.keys.rows(), model.keys.cols());
  for (Eigen::Index i = 0; i < model.keys.rows(); ++i) {
    for (Eigen::Index j = 0; j < model.keys.cols(); ++j) {
      probe.keys(i, j) = model.keys(i, j) + h;
      const double up = model_loss(probe, batch, labels);
      probe.keys(i, j) = model.keys(i, j) - h;
      const double down = model_loss(probe, batch, labels);
      probe.keys(i, j) = model.keys(i, j);
      out(i, j) = (up - down) / (2.0 * h);
    }
  }
  return out;
}

Vector numeric_grad_cache_scores(const CacheModel& model, const Matrix& batch,
                                 std::span<const int> labels, double h) {
  CacheModel probe = model;
  Vector out(model.scores.size());
  for (Eigen::Index i = 0; i < model.scores.size(); ++i) {
    probe.scores[i] = model.scores[i] + h;
    const double up = model_loss(probe, batch, labels);
    probe.scores[i] = model.scores[i] - h;
    const double down = model_loss(probe, batch, labels);
    probe.scores[i] = model.scores[i];
    out[i] = (up - down) / (2.0 * h);
  }
  return out;
}

GradientCheck check_gradients(const CacheModel& model, const Matrix& batch,
                              std::span<const int> labels, double h) {
  const double loss = model_loss(model, batch, labels);
  const double floor =
      std::max(kRelativeErrorFloor,
               1e4 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(loss)) / h);
  GradientCheck out;
  out.keys_max_rel_error = relative_error(grad_keys(model, batch, labels),
                                          numeric_grad_keys(model, batch, labels, h), floor);
  out.scores_max_rel_error = relative_error(grad_cache_scores(model, batch, labels),
                                            numeric_grad_cache_scores(model, batch, labels, h), floor);
  return out;
}

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    raise(ErrorCode::InvalidArgument, "learning_rate must be finite and >= 0");
  }
  if (epochs < 1) raise(ErrorCode::InvalidArgument, "epochs must be >= 1");
  if (batch_size < 1) raise(ErrorCode::InvalidArgument, "batch_size must be >= 1");
  if (!(weight_decay >= 0.0)) raise(ErrorCode::InvalidArgument, "weight_decay must be >= 0");
}

std::string_view to_string(TrainTarget t) noexcept {
  switch (t) {
    case TrainTarget::Keys: return "keys";
    case TrainTarget::CacheScores: return "cache-scores";
    case TrainTarget::Both: return "both";
  }
  return "keys";
}

TrainReport train(const TrainConfig& config, const FeatureBundle& episode, const CacheModel& init,
                  const FeatureBundle* val) {
  config.validate();
  const auto& labels = episode.labels();
  const Matrix& X = episode.data();
  const Eigen::Index n = X.rows();
  if (n == 0) raise(ErrorCode::InvalidArgument, "empty training episode");
  for (Eigen::Index i = 0; i < init.scores.size(); ++i) {
    if (!(init.scores[i] > 0.0)) raise(ErrorCode::InvalidArgument, "cache scores must be > 0");
  }

  const bool train_keys = config.target != TrainTarget::CacheScores;
  const bool train_scores = config.target != TrainTarget::Keys;
  const bool has_val = val != nullptr && val->has_labels() && !val->empty();

  TrainReport report;
  {
    const Eigen::Index head = std::min<Eigen::Index>(n, config.batch_size);
    report.initial_check = check_gradients(
        init, X.topRows(head), std::span<const int>(labels.data(), static_cast<std::size_t>(head)));
  }

  CacheModel model = init;
  Vector rho = init.scores.array().log().matrix();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  const int batches_per_epoch =
      static_cast<int>((n + config.batch_size - 1) / config.batch_size);
  const double total_steps = static_cast<double>(batches_per_epoch) * config.epochs;
  int step = 0;

  auto val_accuracy = [&](const CacheModel& m) {
    const auto& y = val->labels();
    int correct = 0;
    for (Eigen::Index i = 0; i < val->rows(); ++i) {
      if (argmax(m.logits(val->data().row(i).transpose())) == y[static_cast<std::size_t>(i)]) {
        ++correct;
      }
    }
    return 100.0 * correct / static_cast<double>(val->rows());
  };

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    Rng rng(mix_seed(config.seed, static_cast<std::uint64_t>(epoch)));
    rng.shuffle(std::span<Eigen::Index>(order));

    for (Eigen::Index start = 0; start < n; start += config.batch_size) {
      const Eigen::Index count = std::min<Eigen::Index>(config.batch_size, n - start);
      Matrix batch(count, X.cols());
      std::vector<int> batch_labels(static_cast<std::size_t>(count));
      for (Eigen::Index b = 0; b < count; ++b) {
        const Eigen::Index row = order[static_cast<std::size_t>(start + b)];
        batch.row(b) = X.row(row);
        batch_labels[static_cast<std::size_t>(b)] = labels[static_cast<std::size_t>(row)];
      }
      double lr = config.learning_rate;
      if (config.cosine_decay) {
        lr *= 0.5 * (1.0 + std::cos(std::numbers::pi * step / total_steps));
      }
      ++step;

      // Both gradients are taken at the same parameters before either update.
      Matrix g_keys;
      Vector g_rho;
      if (train_keys) g_keys = grad_keys(model, batch, batch_labels);
      if (train_scores) {
        g_rho = grad_cache_scores(model, batch, batch_labels).cwiseProduct(model.scores);
      }
      if (train_keys) {
        model.keys -= lr * (g_keys + config.weight_decay * model.keys);
        if (config.normalize_keys) model.keys.rowwise().normalize();
      }
      if (train_scores) {
        rho -= lr * (g_rho + config.weight_decay * rho);
        model.scores = rho.array().exp().matrix();
      }
    }

    const double loss = model_loss(model, X, labels);
    if (!std::isfinite(loss) || !model.keys.allFinite() || !model.scores.allFinite()) {
      raise(ErrorCode::DivergedLoss, "non-finite loss at epoch " + std::to_string(epoch));
    }
    report.loss_history.push_back(loss);

    if (has_val) {
      const double acc = val_accuracy(model);
      if (acc > report.best_val_accuracy) {
        report.best_val_accuracy = acc;
        report.best_epoch = epoch;
        report.model = model;
      }
    }
  }
  if (!has_val) {
    report.best_epoch = config.epochs;
    report.model = model;
  }
  return report;
}

}  // namespace rpft
