#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "shoring/data.hpp"

namespace shoring {

enum class SymbolicOp {
  Sum,
  Count,
  Average,
  DecaySum,
  DecayCount,
  DecayAverage,
  RatioSumSum,
  RatioCountCount,
  RatioSumAverage,
  CountDistinct,
};

inline const char* to_string(SymbolicOp op) {
  switch (op) {
    case SymbolicOp::Sum: return "sum";
    case SymbolicOp::Count: return "count";
    case SymbolicOp::Average: return "average";
    case SymbolicOp::DecaySum: return "decay_sum";
    case SymbolicOp::DecayCount: return "decay_count";
    case SymbolicOp::DecayAverage: return "decay_average";
    case SymbolicOp::RatioSumSum: return "ratio_sum_sum";
    case SymbolicOp::RatioCountCount: return "ratio_count_count";
    case SymbolicOp::RatioSumAverage: return "ratio_sum_average";
    case SymbolicOp::CountDistinct: return "count_distinct";
  }
  return "?";
}

// Per-event derived value. Fixed interaction catalog between the first and
// third numerical attributes, selected per task by seeded draw.
enum class ValueSelector { N1, N3, N1TimesN3, N1PlusN3, N1DivN3 };

inline const char* to_string(ValueSelector v) {
  switch (v) {
    case ValueSelector::N1: return "n1";
    case ValueSelector::N3: return "n3";
    case ValueSelector::N1TimesN3: return "n1*n3";
    case ValueSelector::N1PlusN3: return "n1+n3";
    case ValueSelector::N1DivN3: return "n1/max(n3,eps)";
  }
  return "?";
}

inline double select_value(ValueSelector sel, const Event& e) {
  double n1 = e.num[0], n3 = e.num[2];
  switch (sel) {
    case ValueSelector::N1: return n1;
    case ValueSelector::N3: return n3;
    case ValueSelector::N1TimesN3: return n1 * n3;
    case ValueSelector::N1PlusN3: return n1 + n3;
    case ValueSelector::N1DivN3: return n1 / std::max(n3, 1e-6);
  }
  return 0.0;
}

// Condition predicates are conjunctions of attribute range tests so the
// encoded event features provably contain the condition's information.
struct RangeTest {
  enum class Attr { Hour, Weekday, Numeric } attr = Attr::Hour;
  int numeric_index = 0;  // for Attr::Numeric
  double lo = 0.0, hi = 0.0;  // inclusive

  bool matches(const Event& e) const {
    double x = 0.0;
    switch (attr) {
      case Attr::Hour: x = double(e.hour()); break;
      case Attr::Weekday: x = double(e.weekday()); break;
      case Attr::Numeric: x = e.num[std::size_t(numeric_index)]; break;
    }
    return x >= lo && x <= hi;
  }
};

struct Condition {
  std::vector<RangeTest> tests;  // conjunction; empty = always true

  bool matches(const Event& e) const {
    for (const auto& t : tests)
      if (!t.matches(e)) return false;
    return true;
  }
  bool trivial() const { return tests.empty(); }
};

// The canonical conditional window: hour between 1 am and 5 am.
inline Condition hour_window(double lo = 1.0, double hi = 5.0) {
  return Condition{{RangeTest{RangeTest::Attr::Hour, 0, lo, hi}}};
}

struct SymbolicExpr {
  SymbolicOp op = SymbolicOp::Sum;
  ValueSelector value_selector = ValueSelector::N1;
  Condition condition;        // numerator condition for ratio ops
  Condition condition2;       // denominator condition (ratio ops only)
  int distinct_field = 0;     // categorical field index (count_distinct only)
  double decay_lambda = 0.5;  // decay ops only

  std::string name() const {
    std::string s = to_string(op);
    if (op == SymbolicOp::CountDistinct) s += "(field" + std::to_string(distinct_field) + ")";
    return s;
  }

  void validate() const {
    bool is_decay = op == SymbolicOp::DecaySum || op == SymbolicOp::DecayCount ||
                    op == SymbolicOp::DecayAverage;
    if (is_decay && !(decay_lambda > 0.0))
      throw std::invalid_argument("SymbolicExpr: decay_lambda must be positive");
    if (op == SymbolicOp::CountDistinct &&
        (distinct_field < 0 || distinct_field >= kNumCatFields))
      throw std::invalid_argument("SymbolicExpr: distinct_field out of range");
  }
};

namespace detail {

struct Accum {
  double sum = 0.0;
  double count = 0.0;
  double average() const { return count > 0.0 ? sum / count : 0.0; }
};

// decayed: each event weighted exp(-lambda * (t_now - t_j)), t_now = final
// event's timestamp (of the whole sequence, not just satisfying events)
inline Accum accumulate(const Sequence& seq, const Condition& cond, ValueSelector sel,
                        bool decayed, double lambda) {
  Accum a;
  if (seq.events.empty()) return a;
  double t_now = seq.events.back().t;
  for (const Event& e : seq.events) {
    if (!cond.matches(e)) continue;
    double w = decayed ? std::exp(-lambda * (t_now - e.t)) : 1.0;
    a.sum += w * select_value(sel, e);
    a.count += w;
  }
  return a;
}

inline double safe_ratio(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

}  // namespace detail

// Two-stage count-distinct: frequency table under the condition, then count
// of positive-frequency entries.
inline std::int64_t eval_count_distinct(const SymbolicExpr& expr, const Sequence& seq) {
  expr.validate();
  std::map<int, std::int64_t> freq;
  for (const Event& e : seq.events)
    freq[e.cat[std::size_t(expr.distinct_field)]] += expr.condition.matches(e) ? 1 : 0;
  std::int64_t z = 0;
  for (const auto& [value, count] : freq)
    if (count > 0) ++z;
  return z;
}

// Independent route for the same quantity: direct set cardinality.
inline std::int64_t count_distinct_direct(const SymbolicExpr& expr, const Sequence& seq) {
  std::set<int> seen;
  for (const Event& e : seq.events)
    if (expr.condition.matches(e)) seen.insert(e.cat[std::size_t(expr.distinct_field)]);
  return std::int64_t(seen.size());
}

inline double eval_expr(const SymbolicExpr& expr, const Sequence& seq) {
  expr.validate();
  using detail::accumulate;
  using detail::safe_ratio;
  switch (expr.op) {
    case SymbolicOp::Sum:
      return accumulate(seq, expr.condition, expr.value_selector, false, 0.0).sum;
    case SymbolicOp::Count:
      return accumulate(seq, expr.condition, expr.value_selector, false, 0.0).count;
    case SymbolicOp::Average:
      return accumulate(seq, expr.condition, expr.value_selector, false, 0.0).average();
    case SymbolicOp::DecaySum:
      return accumulate(seq, expr.condition, expr.value_selector, true, expr.decay_lambda).sum;
    case SymbolicOp::DecayCount:
      return accumulate(seq, expr.condition, expr.value_selector, true, expr.decay_lambda).count;
    case SymbolicOp::DecayAverage:
      return accumulate(seq, expr.condition, expr.value_selector, true, expr.decay_lambda).average();
    case SymbolicOp::RatioSumSum:
      return safe_ratio(accumulate(seq, expr.condition, expr.value_selector, false, 0.0).sum,
                        accumulate(seq, expr.condition2, expr.value_selector, false, 0.0).sum);
    case SymbolicOp::RatioCountCount:
      return safe_ratio(accumulate(seq, expr.condition, expr.value_selector, false, 0.0).count,
                        accumulate(seq, expr.condition2, expr.value_selector, false, 0.0).count);
    case SymbolicOp::RatioSumAverage:
      return safe_ratio(accumulate(seq, expr.condition, expr.value_selector, false, 0.0).sum,
                        accumulate(seq, expr.condition2, expr.value_selector, false, 0.0).average());
    case SymbolicOp::CountDistinct:
      return double(eval_count_distinct(expr, seq));
  }
  throw std::invalid_argument("eval_expr: unknown operator");
}

struct ExprLabelSet {
  SymbolicExpr expr;
  std::vector<double> raw;           // per-sample targets
  std::vector<double> standardized;  // (raw - mean) / std, train statistics
  double mean = 0.0;
  double stddev = 1.0;
};

// Targets are the expression applied to the first sequence of each sample,
// standardized by the given (train-split) statistics. Pass train_stats =
// nullopt to compute statistics from this dataset (the train split itself).
inline ExprLabelSet label_dataset(const SymbolicExpr& expr, const Dataset& ds,
                                  std::optional<std::pair<double, double>> train_stats = {}) {
  if (ds.empty()) throw std::invalid_argument("label_dataset: empty dataset");
  ExprLabelSet out;
  out.expr = expr;
  out.raw.reserve(ds.size());
  for (const auto& sample : ds) out.raw.push_back(eval_expr(expr, sample.sequences.at(0)));
  if (train_stats) {
    out.mean = train_stats->first;
    out.stddev = train_stats->second;
  } else {
    double m = 0.0;
    for (double y : out.raw) m += y;
    m /= double(out.raw.size());
    double var = 0.0;
    for (double y : out.raw) var += (y - m) * (y - m);
    var /= double(out.raw.size());
    out.mean = m;
    out.stddev = std::sqrt(var);
    if (!(out.stddev > 0.0))
      throw std::invalid_argument("label_dataset: constant target column, task degenerate");
  }
  out.standardized.reserve(out.raw.size());
  for (double y : out.raw) out.standardized.push_back((y - out.mean) / out.stddev);
  return out;
}

// ---- task catalog: the 13 regression tasks ----

// Seeded draw from the interaction catalog; a reproducible stand-in for the
// randomly generated interactions between numerical attributes 1 and 3.
inline ValueSelector draw_selector(Rng& rng) {
  static const ValueSelector catalog[] = {ValueSelector::N1, ValueSelector::N3,
                                          ValueSelector::N1TimesN3, ValueSelector::N1PlusN3,
                                          ValueSelector::N1DivN3};
  return catalog[rng.uniform_int(0, 4)];
}

// The nine simple-operator tasks plus count-distinct on the first categorical
// field. decay_lambda defaults to ln(2) / median inter-arrival gap.
inline std::vector<SymbolicExpr> standard_tasks(std::uint64_t seed, double median_gap_hours) {
  Rng rng(seed ^ 0x5e0a11ce);
  double lambda = std::log(2.0) / std::max(median_gap_hours, 1e-9);
  Condition window = hour_window();
  std::vector<SymbolicExpr> tasks;
  auto make = [&](SymbolicOp op, Condition cond, Condition cond2 = {}) {
    SymbolicExpr e;
    e.op = op;
    e.value_selector = draw_selector(rng);
    e.condition = std::move(cond);
    e.condition2 = std::move(cond2);
    e.decay_lambda = lambda;
    tasks.push_back(std::move(e));
  };
  make(SymbolicOp::Sum, {});
  make(SymbolicOp::Count, {});
  make(SymbolicOp::Average, {});
  make(SymbolicOp::DecaySum, {});
  make(SymbolicOp::DecayCount, {});
  make(SymbolicOp::DecayAverage, {});
  make(SymbolicOp::RatioSumSum, window, {});
  make(SymbolicOp::RatioCountCount, window, {});
  make(SymbolicOp::RatioSumAverage, window, {});
  SymbolicExpr distinct;
  distinct.op = SymbolicOp::CountDistinct;
  distinct.condition = window;
  distinct.distinct_field = 0;
  tasks.push_back(std::move(distinct));
  return tasks;
}

inline SymbolicExpr task_by_name(const std::string& name, std::uint64_t seed,
                                 double median_gap_hours) {
  for (auto& t : standard_tasks(seed, median_gap_hours)) {
    if (to_string(t.op) == name) return t;
    if (name == "distinct" && t.op == SymbolicOp::CountDistinct) return t;
  }
  throw std::invalid_argument("unknown symbolic task '" + name + "'");
}

// ---- serialization ----

inline nlohmann::json to_json(const Condition& c) {
  nlohmann::json tests = nlohmann::json::array();
  for (const auto& t : c.tests)
    tests.push_back({{"attr", int(t.attr)}, {"numeric_index", t.numeric_index},
                     {"lo", t.lo}, {"hi", t.hi}});
  return tests;
}

inline nlohmann::json to_json(const SymbolicExpr& e) {
  return nlohmann::json{{"op", to_string(e.op)},
                        {"value_selector", to_string(e.value_selector)},
                        {"condition", to_json(e.condition)},
                        {"condition2", to_json(e.condition2)},
                        {"distinct_field", e.distinct_field},
                        {"decay_lambda", e.decay_lambda}};
}

}  // namespace shoring
