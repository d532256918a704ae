#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <string>
#include <vector>

#include "shoring/rng.hpp"

namespace shoring {

inline constexpr int kNumCatFields = 9;
inline constexpr int kNumNumFields = 4;

// One timestamped record. Categorical values use index 0 as the reserved
// padding value; real values are 1..vocab.
struct Event {
  std::vector<int> cat;      // kNumCatFields entries
  std::vector<double> num;   // kNumNumFields entries
  double t = 0.0;            // event time in hours

  int hour() const { return int(std::floor(t)) % 24; }
  int weekday() const { return int(std::floor(t / 24.0)) % 7; }
  int month() const { return int(std::floor(t / (24.0 * 30.0))) % 12; }

  static Event null_event() {
    Event e;
    e.cat.assign(kNumCatFields, 0);
    e.num.assign(kNumNumFields, 0.0);
    e.t = 0.0;
    return e;
  }
};

inline bool operator==(const Event& a, const Event& b) {
  return a.cat == b.cat && a.num == b.num && a.t == b.t;
}

struct Sequence {
  std::vector<Event> events;
  std::int64_t sequence_id = 0;
};

inline bool operator==(const Sequence& a, const Sequence& b) {
  return a.sequence_id == b.sequence_id && a.events == b.events;
}

struct Sample {
  std::vector<Sequence> sequences;  // exactly m
  double label = 0.0;
};

inline bool operator==(const Sample& a, const Sample& b) {
  return a.label == b.label && a.sequences == b.sequences;
}

using Dataset = std::vector<Sample>;

// The paper's real-data-fitted prior is replaced by explicit parametric
// distributions: Zipf categoricals, lognormal numericals, exponential
// inter-arrival gaps. Seed fixes the full dataset bit-exactly.
struct GeneratorConfig {
  int n_samples = 3000;
  int m = 1;
  std::vector<int> cat_vocab_sizes =
      std::vector<int>{10, 8, 8, 8, 8, 8, 8, 8, 8};  // unique real values per field
  int min_len = 10;
  int max_len = 50;
  double zipf_s = 1.1;
  std::vector<double> num_mu = std::vector<double>{0.0, 0.0, 0.0, 0.0};
  std::vector<double> num_sigma = std::vector<double>{0.5, 0.5, 0.5, 0.5};
  double mean_gap_hours = 2.0;
  double start_window_hours = 24.0 * 7.0;  // sequence start uniform in [0, window)
  std::uint64_t seed = 1;

  void validate() const {
    if (n_samples <= 0 || m <= 0) throw std::invalid_argument("generator: sizes must be positive");
    if (int(cat_vocab_sizes.size()) != kNumCatFields)
      throw std::invalid_argument("generator: need 9 categorical vocabulary sizes");
    for (int v : cat_vocab_sizes)
      if (v < 2)
        throw std::invalid_argument(
            "generator: vocabulary size must be >= 2 (count-distinct field degenerate)");
    if (min_len < 1 || max_len < min_len)
      throw std::invalid_argument("generator: bad length range");
    if (int(num_mu.size()) != kNumNumFields || int(num_sigma.size()) != kNumNumFields)
      throw std::invalid_argument("generator: need 4 numerical distribution parameter pairs");
    if (!(mean_gap_hours > 0.0)) throw std::invalid_argument("generator: mean gap must be > 0");
  }
};

// Pure function of config: each sample is generated from a stream derived
// from (seed, sample index), so sharding across workers and concatenating in
// shard order reproduces the single-threaded output.
inline Dataset generate_dataset(const GeneratorConfig& cfg) {
  cfg.validate();
  std::vector<std::vector<double>> cdfs;
  for (int v : cfg.cat_vocab_sizes) cdfs.push_back(Rng::zipf_cdf(std::size_t(v), cfg.zipf_s));

  Dataset ds;
  ds.reserve(std::size_t(cfg.n_samples));
  for (int si = 0; si < cfg.n_samples; ++si) {
    Rng rng = Rng::derive(cfg.seed, std::uint64_t(si));
    Sample sample;
    sample.label = 0.0;
    for (int qi = 0; qi < cfg.m; ++qi) {
      Sequence seq;
      seq.sequence_id = std::int64_t(si) * cfg.m + qi;
      int len = int(rng.uniform_int(cfg.min_len, cfg.max_len));
      double t = rng.uniform(0.0, cfg.start_window_hours);
      seq.events.reserve(std::size_t(len));
      for (int ei = 0; ei < len; ++ei) {
        Event e;
        e.cat.resize(kNumCatFields);
        for (int f = 0; f < kNumCatFields; ++f)
          e.cat[f] = int(rng.zipf(cdfs[std::size_t(f)])) + 1;  // 0 reserved for padding
        e.num.resize(kNumNumFields);
        for (int k = 0; k < kNumNumFields; ++k)
          e.num[k] = rng.lognormal(cfg.num_mu[std::size_t(k)], cfg.num_sigma[std::size_t(k)]);
        if (ei > 0) t += rng.exponential(cfg.mean_gap_hours);
        e.t = t;
        seq.events.push_back(std::move(e));
      }
      sample.sequences.push_back(std::move(seq));
    }
    ds.push_back(std::move(sample));
  }
  return ds;
}

// Truncation keeps the most recent events (recency-oriented behavioral
// modeling); shorter sequences are right-padded with the null event.
inline std::pair<Sequence, std::vector<double>> pad_and_mask(const Sequence& seq,
                                                             std::size_t tau) {
  if (tau < 1) throw std::invalid_argument("pad_and_mask: tau must be >= 1");
  Sequence out;
  out.sequence_id = seq.sequence_id;
  std::vector<double> mask(tau, 0.0);
  std::size_t n = seq.events.size();
  std::size_t start = n > tau ? n - tau : 0;
  for (std::size_t i = start; i < n; ++i) {
    out.events.push_back(seq.events[i]);
    mask[i - start] = 1.0;
  }
  while (out.events.size() < tau) out.events.push_back(Event::null_event());
  return {std::move(out), std::move(mask)};
}

// Disjoint, exhaustive, seed-deterministic shuffle split.
inline std::pair<Dataset, Dataset> split(const Dataset& ds, double train_fraction,
                                         std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw std::invalid_argument("split: fraction must be in (0, 1)");
  Rng rng(seed);
  auto idx = rng.shuffled_indices(ds.size());
  std::size_t n_train = std::size_t(double(ds.size()) * train_fraction + 0.5);
  Dataset train, test;
  for (std::size_t i = 0; i < idx.size(); ++i)
    (i < n_train ? train : test).push_back(ds[idx[i]]);
  return {std::move(train), std::move(test)};
}

}  // namespace shoring
