#pragma once

// Small dense-tensor and training utilities used by the task heads.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace philokit::nn {

/// Row-major dense matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> flat() { return data_; }
  std::span<const double> flat() const { return data_; }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// A trainable tensor together with its gradient accumulator.
struct Param {
  std::string name;
  Matrix value;
  Matrix grad;

  Param() = default;
  Param(std::string n, std::size_t rows, std::size_t cols)
      : name(std::move(n)), value(rows, cols), grad(rows, cols) {}

  void zero_grad() { grad.fill(0.0); }
};

using ParamList = std::vector<Param*>;

void zero_grads(const ParamList& params);

/// Deterministic generator. Everything random in the toolkit draws from one of these.
using Rng = std::mt19937_64;

/// Uniform in [-scale, scale], via a fixed bit recipe (portable across standard libraries).
double uniform(Rng& rng, double scale);
void init_uniform(Matrix& m, Rng& rng, double scale);

/// Numerically stable softmax of logits into out (same size). -inf entries get probability 0.
void softmax(std::span<const double> logits, std::span<double> out);
double log_sum_exp(std::span<const double> logits);

/// Fisher-Yates shuffle driven by Rng (std::shuffle is implementation-defined).
template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(v[i - 1], v[j]);
  }
}

enum class OptimizerKind { sgd, adam };

/// Training schedule shared by all trainers. Defaults follow the fine-tuning setup
/// (batch 32, patience 5, 50 epochs, lr 1e-4, Adam 0.9/0.999/1e-8, weight decay 1e-5).
struct Schedule {
  int epochs = 50;
  double learning_rate = 1e-4;
  int batch_size = 32;
  int patience = 5;
  OptimizerKind optimizer = OptimizerKind::adam;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double weight_decay = 1e-5;
  std::uint64_t seed = 42;
};

/// SGD or Adam over a fixed parameter list; gradients must be populated before step().
class Optimizer {
 public:
  Optimizer(ParamList params, const Schedule& schedule);
  void step();

 private:
  ParamList params_;
  Schedule schedule_;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  long t_ = 0;
};

/// Snapshot/restore of parameter values (early stopping keeps the best epoch).
std::vector<Matrix> snapshot(const ParamList& params);
void restore(const ParamList& params, const std::vector<Matrix>& values);

/// One row of a training log.
struct EpochRecord {
  int epoch = 0;
  double loss = 0.0;
  /// Dev metric driving early stopping (accuracy, UAS, exact match).
  double metric = 0.0;
  /// Secondary dev metric (LAS for parsing), 0 otherwise.
  double metric2 = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;
  double best_metric = 0.0;
};

/// Computes the loss of a batch and accumulates its gradients (grads are zeroed by the caller).
using BatchStep = std::function<double(std::span<const std::size_t> batch)>;
/// Dev evaluation: (metric, metric2).
using DevEval = std::function<std::pair<double, double>()>;

/// Mini-batch training with per-epoch shuffling, dev evaluation after each epoch and
/// early stopping on the dev metric. The best epoch's parameters are restored at the end.
TrainHistory train_loop(std::size_t example_count, const Schedule& schedule, const ParamList& params,
                        const BatchStep& step, const DevEval& evaluate);

nlohmann::json to_json(const Matrix& m);
Matrix matrix_from_json(const nlohmann::json& j);

}  // namespace philokit::nn
