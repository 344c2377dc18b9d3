#include "philokit/nn.hpp"

#include <cmath>
#include <limits>

#include "philokit/error.hpp"

namespace philokit::nn {

void zero_grads(const ParamList& params) {
  for (Param* p : params) p->zero_grad();
}

double uniform(Rng& rng, double scale) {
  // 53 high bits -> [0, 1)
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return (2.0 * u - 1.0) * scale;
}

void init_uniform(Matrix& m, Rng& rng, double scale) {
  for (double& x : m.flat()) x = uniform(rng, scale);
}

double log_sum_exp(std::span<const double> logits) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double x : logits) mx = std::max(mx, x);
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (double x : logits) s += std::exp(x - mx);
  return mx + std::log(s);
}

void softmax(std::span<const double> logits, std::span<double> out) {
  if (logits.size() != out.size()) throw Error("softmax: size mismatch");
  double mx = -std::numeric_limits<double>::infinity();
  for (double x : logits) mx = std::max(mx, x);
  if (!std::isfinite(mx)) throw Error("softmax: no finite logit");
  double s = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - mx);
    s += out[i];
  }
  for (double& p : out) p /= s;
}

Optimizer::Optimizer(ParamList params, const Schedule& schedule)
    : params_(std::move(params)), schedule_(schedule) {
  if (schedule_.optimizer == OptimizerKind::adam) {
    for (const Param* p : params_) {
      m_.emplace_back(p->value.rows(), p->value.cols());
      v_.emplace_back(p->value.rows(), p->value.cols());
    }
  }
}

void Optimizer::step() {
  const double lr = schedule_.learning_rate;
  if (lr == 0.0) return;
  ++t_;
  const double b1 = schedule_.adam_beta1;
  const double b2 = schedule_.adam_beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    auto w = params_[k]->value.flat();
    auto g = params_[k]->grad.flat();
    if (schedule_.weight_decay != 0.0)
      for (double& x : w) x -= lr * schedule_.weight_decay * x;
    if (schedule_.optimizer == OptimizerKind::sgd) {
      for (std::size_t i = 0; i < w.size(); ++i) w[i] -= lr * g[i];
      continue;
    }
    auto m = m_[k].flat();
    auto v = v_[k].flat();
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = b1 * m[i] + (1.0 - b1) * g[i];
      v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
      w[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + schedule_.adam_eps);
    }
  }
}

std::vector<Matrix> snapshot(const ParamList& params) {
  std::vector<Matrix> out;
  out.reserve(params.size());
  for (const Param* p : params) out.push_back(p->value);
  return out;
}

void restore(const ParamList& params, const std::vector<Matrix>& values) {
  if (params.size() != values.size()) throw Error("restore: parameter count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = values[i];
}

TrainHistory train_loop(std::size_t example_count, const Schedule& schedule, const ParamList& params,
                        const BatchStep& step, const DevEval& evaluate) {
  if (example_count == 0) throw Error("training split is empty");
  if (schedule.batch_size < 1) throw Error("batch size must be positive");
  Rng rng(schedule.seed);
  Optimizer opt(params, schedule);
  std::vector<std::size_t> order(example_count);
  for (std::size_t i = 0; i < example_count; ++i) order[i] = i;

  TrainHistory h;
  h.best_metric = -1.0;
  std::vector<Matrix> best = snapshot(params);
  int bad_epochs = 0;
  const auto bs = static_cast<std::size_t>(schedule.batch_size);
  for (int epoch = 1; epoch <= schedule.epochs; ++epoch) {
    shuffle(order, rng);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += bs) {
      const std::size_t end = std::min(order.size(), start + bs);
      zero_grads(params);
      loss_sum += step(std::span<const std::size_t>(order.data() + start, end - start));
      opt.step();
      ++batches;
    }
    const auto [metric, metric2] = evaluate();
    h.epochs.push_back({epoch, loss_sum / static_cast<double>(batches), metric, metric2});
    if (metric > h.best_metric) {
      h.best_metric = metric;
      h.best_epoch = epoch;
      best = snapshot(params);
      bad_epochs = 0;
    } else if (++bad_epochs >= schedule.patience) {
      break;
    }
  }
  restore(params, best);
  return h;
}

nlohmann::json to_json(const Matrix& m) {
  return {{"rows", m.rows()},
          {"cols", m.cols()},
          {"data", std::vector<double>(m.flat().begin(), m.flat().end())}};
}

Matrix matrix_from_json(const nlohmann::json& j) {
  Matrix m(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
  const auto data = j.at("data").get<std::vector<double>>();
  if (data.size() != m.size()) throw Error("matrix json: data size mismatch");
  std::copy(data.begin(), data.end(), m.flat().begin());
  return m;
}

}  // namespace philokit::nn
