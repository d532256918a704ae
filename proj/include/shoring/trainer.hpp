#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "shoring/model.hpp"
#include "shoring/stattest.hpp"

namespace shoring {

enum class LossKind { Mse, Kl };

struct TrainConfig {
  double learning_rate = 1e-3;  // within the grid {1,5,10,100}x1e-5
  int batch_size = 128;
  int max_epochs = 120;
  int patience = 5;  // early-stop epochs without validation improvement
  std::uint64_t seed = 1;
  double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
  LossKind loss = LossKind::Mse;
  double val_fraction = 0.1;

  void validate() const {
    if (!(learning_rate > 0.0)) throw std::invalid_argument("train: learning rate must be > 0");
    if (batch_size < 1) throw std::invalid_argument("train: batch size must be >= 1");
  }
};

struct AdamState {
  std::vector<Tensor> m, v;

  void init_like(const std::vector<Tensor>& params) {
    m.clear();
    v.clear();
    for (const auto& p : params) {
      m.push_back(Tensor::zeros(p.shape));
      v.push_back(Tensor::zeros(p.shape));
    }
  }
};

// Standard bias-corrected Adam update. Aborts on non-finite gradients naming
// the offending parameter.
inline void adam_step(std::vector<Tensor>& params, const std::vector<Tensor>& grads,
                      AdamState& state, int t, const TrainConfig& cfg,
                      const std::vector<std::string>& names = {}) {
  if (t < 1) throw std::invalid_argument("adam_step: t must be >= 1");
  if (params.size() != grads.size()) throw std::invalid_argument("adam_step: size mismatch");
  double bc1 = 1.0 - std::pow(cfg.beta1, t);
  double bc2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = params[i];
    const Tensor& g = grads[i];
    for (std::size_t j = 0; j < p.numel(); ++j) {
      if (!std::isfinite(g.v[j]))
        throw std::runtime_error("adam_step: non-finite gradient in parameter " +
                                 (i < names.size() ? names[i] : std::to_string(i)));
      double m = state.m[i].v[j] = cfg.beta1 * state.m[i].v[j] + (1.0 - cfg.beta1) * g.v[j];
      double v = state.v[i].v[j] = cfg.beta2 * state.v[i].v[j] + (1.0 - cfg.beta2) * g.v[j] * g.v[j];
      p.v[j] -= cfg.learning_rate * (m / bc1) / (std::sqrt(v / bc2) + cfg.adam_eps);
    }
  }
}

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double wall_time_s = 0.0;
};

struct TrainResult {
  Model best;               // best-validation checkpoint
  std::vector<EpochLog> log;
  double best_val_loss = 0.0;
  bool diverged = false;
};

namespace detail {

inline Var batch_loss(Tape& t, const Model& model, const std::vector<Var>& leaves,
                      const std::vector<EncodedSample>& samples,
                      const std::vector<std::size_t>& idx, LossKind loss) {
  std::vector<Var> per_sample;
  per_sample.reserve(idx.size());
  if (loss == LossKind::Mse) {
    std::vector<double> targets;
    for (std::size_t i : idx) {
      per_sample.push_back(model.predict(t, leaves, samples[i]));
      targets.push_back(samples[i].target);
    }
    Var preds = concat_rows(t, per_sample);
    Var y = t.constant(Tensor({targets.size(), 1}, targets));
    return mse(t, preds, y);
  }
  // KL divergence against one-hot class targets (cross entropy)
  std::vector<Var> losses;
  for (std::size_t i : idx) {
    Var logits = model.predict(t, leaves, samples[i]);  // C x 1
    std::size_t c = t.value(logits).numel();
    Var probs = masked_softmax(t, transpose(t, logits), std::vector<double>(c, 1.0));  // 1 x C
    Tensor onehot({1, c});
    onehot.at(0, std::size_t(samples[i].target)) = 1.0;
    Var picked = sum_all(t, mul(t, probs, t.constant(std::move(onehot))));
    losses.push_back(scale(t, log_(t, picked), -1.0));
  }
  return mean_all(t, concat_rows(t, losses));
}

inline double eval_loss(const Model& model, const std::vector<EncodedSample>& samples,
                        const std::vector<std::size_t>& idx, LossKind loss,
                        std::size_t chunk = 256) {
  double total = 0.0;
  for (std::size_t start = 0; start < idx.size(); start += chunk) {
    std::vector<std::size_t> part(idx.begin() + long(start),
                                  idx.begin() + long(std::min(start + chunk, idx.size())));
    Tape t;
    auto leaves = model.make_leaves(t, false);
    total += t.value(batch_loss(t, model, leaves, samples, part, loss)).v[0] *
             double(part.size());
  }
  return total / double(idx.size());
}

}  // namespace detail

// Mini-batch training with seed-deterministic shuffling, a 10% validation
// holdout from the train split and early stopping. Returns the
// best-validation checkpoint; on divergence returns the last good one with
// the flag set.
inline TrainResult train(Model model, const std::vector<EncodedSample>& train_samples,
                         const TrainConfig& cfg) {
  cfg.validate();
  auto t_start = std::chrono::steady_clock::now();

  Rng split_rng = Rng::derive(cfg.seed, 0xa11);
  auto order = split_rng.shuffled_indices(train_samples.size());
  std::size_t n_val = std::max<std::size_t>(1, std::size_t(double(order.size()) * cfg.val_fraction));
  std::vector<std::size_t> val_idx(order.begin(), order.begin() + long(n_val));
  std::vector<std::size_t> fit_idx(order.begin() + long(n_val), order.end());

  AdamState state;
  state.init_like(model.params.values);
  TrainResult result;
  result.best = model;
  result.best_val_loss = detail::eval_loss(model, train_samples, val_idx, cfg.loss);
  int since_best = 0;
  int step = 0;

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    Rng epoch_rng = Rng::derive(cfg.seed, 0xe90c000 + std::uint64_t(epoch));
    auto perm = epoch_rng.shuffled_indices(fit_idx.size());
    double epoch_loss = 0.0;
    std::size_t n_batches = 0;
    bool diverged = false;

    for (std::size_t start = 0; start < fit_idx.size(); start += std::size_t(cfg.batch_size)) {
      std::vector<std::size_t> batch;
      for (std::size_t i = start; i < std::min(start + std::size_t(cfg.batch_size), fit_idx.size()); ++i)
        batch.push_back(fit_idx[perm[i]]);
      try {
        Tape t;
        auto leaves = model.make_leaves(t, true);
        Var loss = detail::batch_loss(t, model, leaves, train_samples, batch, cfg.loss);
        double lv = t.value(loss).v[0];
        if (!std::isfinite(lv)) throw std::runtime_error("non-finite loss");
        t.backward(loss);
        std::vector<Tensor> grads;
        grads.reserve(leaves.size());
        for (Var l : leaves) grads.push_back(t.grad(l));
        adam_step(model.params.values, grads, state, ++step, cfg, model.params.names);
        epoch_loss += lv;
        ++n_batches;
      } catch (const std::runtime_error&) {
        diverged = true;
        break;
      }
    }
    if (diverged) {
      result.diverged = true;
      break;
    }

    double val_loss = detail::eval_loss(model, train_samples, val_idx, cfg.loss);
    EpochLog el;
    el.epoch = epoch;
    el.train_loss = n_batches ? epoch_loss / double(n_batches) : 0.0;
    el.val_loss = val_loss;
    el.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    result.log.push_back(el);

    if (val_loss < result.best_val_loss) {
      result.best_val_loss = val_loss;
      result.best = model;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }
  return result;
}

struct FitReport {
  std::string model_name;
  std::string task_name;
  FitMetrics metrics;
  TwoSampleResult two_sample;
  // classification path
  bool classification = false;
  double kl_loss = 0.0;
  double auc = 0.0;
  double recall_at_p99 = 0.0;
};

inline std::vector<double> predict_all(const Model& model,
                                       const std::vector<EncodedSample>& samples,
                                       std::size_t chunk = 256) {
  std::vector<double> preds;
  preds.reserve(samples.size());
  for (std::size_t start = 0; start < samples.size(); start += chunk) {
    Tape t;
    auto leaves = model.make_leaves(t, false);
    for (std::size_t i = start; i < std::min(start + chunk, samples.size()); ++i) {
      const Tensor& out = t.value(model.predict(t, leaves, samples[i]));
      preds.push_back(out.v[0]);
    }
  }
  return preds;
}

// Mann-Whitney AUC with tie correction.
inline double auc_score(const std::vector<double>& scores, const std::vector<int>& labels) {
  std::vector<std::size_t> idx(scores.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  std::vector<double> rank(scores.size());
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    while (j + 1 < idx.size() && scores[idx[j + 1]] == scores[idx[i]]) ++j;
    double r = (double(i) + double(j)) / 2.0 + 1.0;
    for (std::size_t q = i; q <= j; ++q) rank[idx[q]] = r;
    i = j + 1;
  }
  double sum_pos = 0.0, n_pos = 0.0, n_neg = 0.0;
  for (std::size_t q = 0; q < scores.size(); ++q) {
    if (labels[q]) {
      sum_pos += rank[q];
      n_pos += 1.0;
    } else {
      n_neg += 1.0;
    }
  }
  if (n_pos == 0.0 || n_neg == 0.0) return 0.5;
  return (sum_pos - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg);
}

inline double recall_at_precision(const std::vector<double>& scores,
                                  const std::vector<int>& labels, double min_precision) {
  std::vector<std::size_t> idx(scores.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  double n_pos = 0.0;
  for (int l : labels) n_pos += l ? 1.0 : 0.0;
  if (n_pos == 0.0) return 0.0;
  double tp = 0.0, best = 0.0;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    tp += labels[idx[i]] ? 1.0 : 0.0;
    double precision = tp / double(i + 1);
    if (precision >= min_precision) best = std::max(best, tp / n_pos);
  }
  return best;
}

// Regression: six fit metrics plus the permutation MMD test between
// (standardized) predictions and targets. Classification: KL loss, AUC and
// recall at 99% precision.
inline FitReport evaluate(const Model& model, const std::vector<EncodedSample>& test_samples,
                          LossKind loss, int n_permutations = 199, std::uint64_t seed = 7) {
  FitReport report;
  report.model_name = to_string(model.spec.arch);
  if (loss == LossKind::Mse) {
    std::vector<double> preds = predict_all(model, test_samples);
    std::vector<double> targets;
    for (const auto& s : test_samples) targets.push_back(s.target);
    report.metrics = fit_metrics(preds, targets);
    report.two_sample = permutation_test(preds, targets, n_permutations, seed);
  } else {
    report.classification = true;
    std::vector<double> score_pos;
    std::vector<int> labels;
    double kl = 0.0;
    std::size_t chunk = 256;
    for (std::size_t start = 0; start < test_samples.size(); start += chunk) {
      Tape t;
      auto leaves = model.make_leaves(t, false);
      for (std::size_t i = start; i < std::min(start + chunk, test_samples.size()); ++i) {
        const Tensor& logits = t.value(model.predict(t, leaves, test_samples[i]));
        double mx = *std::max_element(logits.v.begin(), logits.v.end());
        double z = 0.0;
        for (double l : logits.v) z += std::exp(l - mx);
        int y = int(test_samples[i].target);
        kl += -(logits.v[std::size_t(y)] - mx - std::log(z));
        score_pos.push_back(std::exp(logits.v[1] - mx) / z);
        labels.push_back(y);
      }
    }
    report.kl_loss = kl / double(test_samples.size());
    report.auc = auc_score(score_pos, labels);
    report.recall_at_p99 = recall_at_precision(score_pos, labels, 0.99);
  }
  return report;
}

struct GridPoint {
  TrainConfig config;
  double val_loss = 0.0;
};

// Trains each grid point (optionally random-subsampled under the budget) and
// ranks by validation loss.
inline std::vector<GridPoint> grid_search(const ModelSpec& spec, const EncoderSpec& enc,
                                          const std::vector<EncodedSample>& train_samples,
                                          std::vector<TrainConfig> grid, int budget,
                                          std::uint64_t seed) {
  if (grid.empty()) throw std::invalid_argument("grid_search: empty grid");
  if (budget < 1) throw std::invalid_argument("grid_search: budget must be >= 1");
  if (int(grid.size()) > budget) {
    Rng rng = Rng::derive(seed, 0x92d);
    auto idx = rng.shuffled_indices(grid.size());
    std::vector<TrainConfig> keep;
    for (int i = 0; i < budget; ++i) keep.push_back(grid[idx[std::size_t(i)]]);
    grid = std::move(keep);
  }
  std::vector<GridPoint> board;
  for (const auto& cfg : grid) {
    Model model(spec, enc, cfg.seed);
    TrainResult r = train(std::move(model), train_samples, cfg);
    board.push_back({cfg, r.best_val_loss});
  }
  std::stable_sort(board.begin(), board.end(),
                   [](const GridPoint& a, const GridPoint& b) { return a.val_loss < b.val_loss; });
  return board;
}

}  // namespace shoring
