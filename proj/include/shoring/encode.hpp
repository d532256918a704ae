#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "shoring/data.hpp"
#include "shoring/tensor.hpp"

namespace shoring {

inline constexpr int kHourSlots = 24;
inline constexpr int kWeekdaySlots = 7;
inline constexpr int kMonthSlots = 12;
// hour + weekday + month one-hots, two continuous gap features, 4 numericals
inline constexpr int kDenseWidth = kHourSlots + kWeekdaySlots + kMonthSlots + 2 + kNumNumFields;

// Dense-index layout per categorical field: 0 = padding, 1 = lowfreq (rare or
// unseen), 2.. = surviving values in ascending raw-value order.
inline constexpr int kPadIndex = 0;
inline constexpr int kLowFreqIndex = 1;

struct VocabStats {
  std::vector<std::map<int, std::int64_t>> freq;  // per field: raw value -> train count
  int lowfreq_cutoff = 5;
};

struct CatFieldSpec {
  std::map<int, int> dense_index;  // raw value -> dense index (>= 2)
  int table_size = 2;              // padding + lowfreq + survivors
};

struct EncoderSpec {
  std::vector<CatFieldSpec> cat_fields;        // kNumCatFields entries
  std::vector<double> num_lo, num_hi;          // min-max after [p1, p99] clipping
  std::vector<bool> num_constant;              // warning flag: degenerate column
  double gap_prev_lo = 0.0, gap_prev_hi = 1.0;
  double gap_latest_lo = 0.0, gap_latest_hi = 1.0;

  int d_dense() const { return kDenseWidth; }
};

namespace detail {

inline std::pair<double, double> clipped_range(std::vector<double> vals) {
  if (vals.empty()) return {0.0, 1.0};
  std::sort(vals.begin(), vals.end());
  auto pct = [&](double p) {
    double pos = p * double(vals.size() - 1);
    std::size_t i = std::size_t(pos);
    double frac = pos - double(i);
    return i + 1 < vals.size() ? vals[i] * (1.0 - frac) + vals[i + 1] * frac : vals[i];
  };
  return {pct(0.01), pct(0.99)};
}

inline double minmax(double x, double lo, double hi) {
  if (!(hi > lo)) return 0.5;  // constant column
  double z = (x - lo) / (hi - lo);
  return z < 0.0 ? 0.0 : (z > 1.0 ? 1.0 : z);
}

}  // namespace detail

// Fits vocabulary statistics and min-max ranges from the training split only.
inline std::pair<VocabStats, EncoderSpec> fit_encoder(const Dataset& train, int lowfreq_cutoff) {
  if (train.empty()) throw std::invalid_argument("fit_encoder: empty training data");
  VocabStats stats;
  stats.lowfreq_cutoff = lowfreq_cutoff;
  stats.freq.resize(kNumCatFields);
  std::vector<std::vector<double>> num_vals(kNumNumFields);
  std::vector<double> gaps_prev, gaps_latest;

  for (const auto& sample : train) {
    for (const auto& seq : sample.sequences) {
      double t_last = seq.events.empty() ? 0.0 : seq.events.back().t;
      double t_prev = 0.0;
      for (std::size_t j = 0; j < seq.events.size(); ++j) {
        const Event& e = seq.events[j];
        for (int f = 0; f < kNumCatFields; ++f) stats.freq[std::size_t(f)][e.cat[std::size_t(f)]]++;
        for (int k = 0; k < kNumNumFields; ++k) num_vals[std::size_t(k)].push_back(e.num[std::size_t(k)]);
        gaps_prev.push_back(j == 0 ? 0.0 : e.t - t_prev);
        gaps_latest.push_back(t_last - e.t);
        t_prev = e.t;
      }
    }
  }

  EncoderSpec spec;
  spec.cat_fields.resize(kNumCatFields);
  for (int f = 0; f < kNumCatFields; ++f) {
    CatFieldSpec& cf = spec.cat_fields[std::size_t(f)];
    int next = kLowFreqIndex + 1;
    for (const auto& [value, count] : stats.freq[std::size_t(f)])
      if (count >= lowfreq_cutoff) cf.dense_index[value] = next++;
    cf.table_size = next;
  }
  for (int k = 0; k < kNumNumFields; ++k) {
    auto [lo, hi] = detail::clipped_range(num_vals[std::size_t(k)]);
    spec.num_lo.push_back(lo);
    spec.num_hi.push_back(hi);
    spec.num_constant.push_back(!(hi > lo));
  }
  std::tie(spec.gap_prev_lo, spec.gap_prev_hi) = detail::clipped_range(gaps_prev);
  std::tie(spec.gap_latest_lo, spec.gap_latest_hi) = detail::clipped_range(gaps_latest);
  return {std::move(stats), std::move(spec)};
}

// Raw value -> dense embedding index; unseen or low-frequency values map to
// the shared lowfreq bucket.
inline int dense_cat_index(const CatFieldSpec& cf, int raw_value) {
  if (raw_value == kPadIndex) return kPadIndex;
  auto it = cf.dense_index.find(raw_value);
  return it == cf.dense_index.end() ? kLowFreqIndex : it->second;
}

// Time feature block: discrete one-hots for (hour, weekday, month) plus two
// min-max normalized continuous gaps. The first event's previous-gap is 0.
inline void encode_time(const Event& e, double gap_prev, double gap_latest,
                        const EncoderSpec& spec, double* out) {
  for (int i = 0; i < kHourSlots + kWeekdaySlots + kMonthSlots; ++i) out[i] = 0.0;
  out[e.hour()] = 1.0;
  out[kHourSlots + e.weekday()] = 1.0;
  out[kHourSlots + kWeekdaySlots + e.month()] = 1.0;
  out[kHourSlots + kWeekdaySlots + kMonthSlots] =
      detail::minmax(gap_prev, spec.gap_prev_lo, spec.gap_prev_hi);
  out[kHourSlots + kWeekdaySlots + kMonthSlots + 1] =
      detail::minmax(gap_latest, spec.gap_latest_lo, spec.gap_latest_hi);
}

struct EncodedSequence {
  std::vector<std::vector<int>> cat_idx;  // [field][position], dense indices
  Tensor dense;                           // d_dense x tau
  std::vector<double> mask;               // length tau
};

// Encodes a padded sequence: dense block (time + numericals) plus per-field
// dense categorical indices consumed by trainable embedding tables.
inline EncodedSequence encode_sequence(const Sequence& padded, const std::vector<double>& mask,
                                       const EncoderSpec& spec) {
  std::size_t tau = padded.events.size();
  EncodedSequence out;
  out.mask = mask;
  out.cat_idx.assign(kNumCatFields, std::vector<int>(tau, kPadIndex));
  out.dense = Tensor({std::size_t(kDenseWidth), tau});

  // latest valid event's timestamp
  double t_last = 0.0;
  for (std::size_t j = 0; j < tau; ++j)
    if (mask[j] != 0.0) t_last = padded.events[j].t;

  double t_prev = 0.0;
  bool first = true;
  std::vector<double> col(kDenseWidth);
  for (std::size_t j = 0; j < tau; ++j) {
    const Event& e = padded.events[j];
    if (mask[j] == 0.0) continue;  // padded column stays all-zero
    for (int f = 0; f < kNumCatFields; ++f)
      out.cat_idx[std::size_t(f)][j] = dense_cat_index(spec.cat_fields[std::size_t(f)], e.cat[std::size_t(f)]);
    double gap_prev = first ? 0.0 : e.t - t_prev;
    encode_time(e, gap_prev, t_last - e.t, spec, col.data());
    for (int k = 0; k < kNumNumFields; ++k)
      col[std::size_t(kDenseWidth - kNumNumFields + k)] =
          detail::minmax(e.num[std::size_t(k)], spec.num_lo[std::size_t(k)], spec.num_hi[std::size_t(k)]);
    for (int r = 0; r < kDenseWidth; ++r) out.dense.at(std::size_t(r), j) = col[std::size_t(r)];
    t_prev = e.t;
    first = false;
  }
  return out;
}

// Boolean one-hot per the three-valued convention (1, 0, none).
inline std::vector<double> encode_bool(std::optional<bool> value) {
  if (!value.has_value()) return {0.0, 0.0, 1.0};
  return *value ? std::vector<double>{1.0, 0.0, 0.0} : std::vector<double>{0.0, 1.0, 0.0};
}

// Binary expansion of an id index, most-significant bit first, width
// ceil(log2 N).
inline std::vector<double> encode_id(std::int64_t index, std::int64_t n_ids) {
  if (index < 0 || index >= n_ids)
    throw std::invalid_argument("encode_id: index " + std::to_string(index) +
                                " out of range for N=" + std::to_string(n_ids));
  int width = 0;
  while ((std::int64_t(1) << width) < n_ids) ++width;
  std::vector<double> bits(std::size_t(width), 0.0);
  for (int b = 0; b < width; ++b)
    bits[std::size_t(b)] = double((index >> (width - 1 - b)) & 1);
  return bits;
}

// ---- JSON sidecar persistence so train/test runs share one fitted encoder ----

inline nlohmann::json to_json(const EncoderSpec& spec) {
  nlohmann::json fields = nlohmann::json::array();
  for (const auto& cf : spec.cat_fields) {
    nlohmann::json mapping = nlohmann::json::array();
    for (const auto& [raw, dense] : cf.dense_index) mapping.push_back({raw, dense});
    fields.push_back({{"dense_index", std::move(mapping)}, {"table_size", cf.table_size}});
  }
  return nlohmann::json{{"cat_fields", std::move(fields)},
                        {"num_lo", spec.num_lo},
                        {"num_hi", spec.num_hi},
                        {"num_constant", std::vector<int>(spec.num_constant.begin(), spec.num_constant.end())},
                        {"gap_prev_lo", spec.gap_prev_lo},
                        {"gap_prev_hi", spec.gap_prev_hi},
                        {"gap_latest_lo", spec.gap_latest_lo},
                        {"gap_latest_hi", spec.gap_latest_hi}};
}

inline EncoderSpec encoder_spec_from_json(const nlohmann::json& j) {
  EncoderSpec spec;
  for (const auto& f : j.at("cat_fields")) {
    CatFieldSpec cf;
    for (const auto& pair : f.at("dense_index")) cf.dense_index[pair[0].get<int>()] = pair[1].get<int>();
    cf.table_size = f.at("table_size").get<int>();
    spec.cat_fields.push_back(std::move(cf));
  }
  spec.num_lo = j.at("num_lo").get<std::vector<double>>();
  spec.num_hi = j.at("num_hi").get<std::vector<double>>();
  for (int c : j.at("num_constant").get<std::vector<int>>()) spec.num_constant.push_back(c != 0);
  spec.gap_prev_lo = j.at("gap_prev_lo").get<double>();
  spec.gap_prev_hi = j.at("gap_prev_hi").get<double>();
  spec.gap_latest_lo = j.at("gap_latest_lo").get<double>();
  spec.gap_latest_hi = j.at("gap_latest_hi").get<double>();
  return spec;
}

}  // namespace shoring
