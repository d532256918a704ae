#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "shoring/rng.hpp"

namespace shoring {

using Point = std::vector<double>;

struct TwoSampleResult {
  double mmd_hat = 0.0;
  double p_value = 1.0;
  int n_permutations = 0;
  double bandwidth = 1.0;
  std::uint64_t seed = 0;
};

struct FitMetrics {
  double loss = 0.0;        // mean squared error
  double std_r = 0.0;       // |std - std_hat| / std
  double ptb_at_1pct = 0.0;   // fraction of samples with perturbation > 0.01
  double ptb_r_at_1pct = 0.0; // mean perturbation over those samples
  double r2 = 0.0;
  double pearson = 0.0;
};

namespace detail {

inline double sq_dist(const Point& a, const Point& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

inline void check_finite_points(const std::vector<Point>& s, const char* who) {
  for (const auto& p : s)
    for (double x : p)
      if (!std::isfinite(x)) throw std::invalid_argument(std::string(who) + ": non-finite input");
}

}  // namespace detail

// RBF kernel k(x,y) = exp(-|x-y|^2 / (2 sigma^2)).
inline double rbf(const Point& a, const Point& b, double sigma) {
  return std::exp(-detail::sq_dist(a, b) / (2.0 * sigma * sigma));
}

// Biased MMD estimate: sqrt(mean k(a,a') + mean k(b,b') - 2 mean k(a,b)),
// clamped at 0 against round-off.
inline double mmd(const std::vector<Point>& a, const std::vector<Point>& b, double sigma) {
  if (a.empty() || b.empty()) throw std::invalid_argument("mmd: samples must be non-empty");
  if (!(sigma > 0.0)) throw std::invalid_argument("mmd: bandwidth must be positive");
  detail::check_finite_points(a, "mmd");
  detail::check_finite_points(b, "mmd");
  double kaa = 0.0, kbb = 0.0, kab = 0.0;
  for (const auto& x : a)
    for (const auto& y : a) kaa += rbf(x, y, sigma);
  for (const auto& x : b)
    for (const auto& y : b) kbb += rbf(x, y, sigma);
  for (const auto& x : a)
    for (const auto& y : b) kab += rbf(x, y, sigma);
  double m = double(a.size()), n = double(b.size());
  double v = kaa / (m * m) + kbb / (n * n) - 2.0 * kab / (m * n);
  return std::sqrt(std::max(0.0, v));
}

struct BandwidthResult {
  double sigma = 1e-8;
  bool degenerate = false;
};

// Median of pairwise Euclidean distances over the pooled sample, subsampled
// to at most 2000 points for cost; floor 1e-8 with a degenerate flag when all
// points coincide.
inline BandwidthResult median_bandwidth(const std::vector<Point>& pooled,
                                        std::uint64_t seed = 0x6d656469) {
  if (pooled.size() < 2)
    throw std::invalid_argument("median_bandwidth: need at least 2 points");
  std::vector<const Point*> pts;
  if (pooled.size() <= 2000) {
    for (const auto& p : pooled) pts.push_back(&p);
  } else {
    Rng rng(seed);
    auto idx = rng.shuffled_indices(pooled.size());
    for (std::size_t i = 0; i < 2000; ++i) pts.push_back(&pooled[idx[i]]);
  }
  std::vector<double> dists;
  dists.reserve(pts.size() * (pts.size() - 1) / 2);
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j)
      dists.push_back(std::sqrt(detail::sq_dist(*pts[i], *pts[j])));
  std::nth_element(dists.begin(), dists.begin() + long(dists.size() / 2), dists.end());
  double med = dists[dists.size() / 2];
  if (med > 1e-8) return {med, false};
  return {1e-8, true};
}

// Permutation two-sample test of the null hypothesis that both samples stem
// from the same distribution. p = (1 + #{permuted mmd >= observed}) / (B+1);
// bandwidth is fixed from the pooled original sample; each permutation uses a
// stream derived from (seed, permutation index) so the result is independent
// of evaluation order.
inline TwoSampleResult permutation_test(const std::vector<Point>& a, const std::vector<Point>& b,
                                        int n_permutations, std::uint64_t seed) {
  if (n_permutations < 99)
    throw std::invalid_argument("permutation_test: need at least 99 permutations");
  std::vector<Point> pooled;
  pooled.reserve(a.size() + b.size());
  pooled.insert(pooled.end(), a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  detail::check_finite_points(pooled, "permutation_test");
  double sigma = median_bandwidth(pooled).sigma;

  std::size_t na = a.size(), n = pooled.size();
  // pooled kernel matrix, computed once; permutations only reindex sums
  std::vector<double> K(n * n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    K[i * n + i] = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      double k = rbf(pooled[i], pooled[j], sigma);
      K[i * n + j] = k;
      K[j * n + i] = k;
    }
  }
  for (double k : K) total += k;

  auto mmd_sq_of = [&](const std::size_t* ia, std::size_t cnt_a) {
    double saa = 0.0;
    for (std::size_t i = 0; i < cnt_a; ++i) {
      const double* row = &K[ia[i] * n];
      for (std::size_t j = 0; j < cnt_a; ++j) saa += row[ia[j]];
    }
    // total = saa + sbb + 2 sab, so isolate sbb via the complement sum
    double sa_rows = 0.0;  // sum over rows in A of the whole row
    for (std::size_t i = 0; i < cnt_a; ++i) {
      const double* row = &K[ia[i] * n];
      for (std::size_t j = 0; j < n; ++j) sa_rows += row[j];
    }
    double sab = sa_rows - saa;
    double sbb = total - saa - 2.0 * sab;
    double m = double(cnt_a), nb = double(n - cnt_a);
    return saa / (m * m) + sbb / (nb * nb) - 2.0 * sab / (m * nb);
  };

  std::vector<std::size_t> ident(n);
  for (std::size_t i = 0; i < n; ++i) ident[i] = i;
  double observed_sq = mmd_sq_of(ident.data(), na);

  int n_ge = 0;
  for (int p = 0; p < n_permutations; ++p) {
    Rng rng = Rng::derive(seed, std::uint64_t(p));
    auto perm = rng.shuffled_indices(n);
    if (mmd_sq_of(perm.data(), na) >= observed_sq) ++n_ge;
  }

  TwoSampleResult res;
  res.mmd_hat = std::sqrt(std::max(0.0, observed_sq));
  res.p_value = double(1 + n_ge) / double(n_permutations + 1);
  res.n_permutations = n_permutations;
  res.bandwidth = sigma;
  res.seed = seed;
  return res;
}

// scalar-sample conveniences
inline std::vector<Point> as_points(const std::vector<double>& xs) {
  std::vector<Point> out;
  out.reserve(xs.size());
  for (double x : xs) out.push_back({x});
  return out;
}

inline TwoSampleResult permutation_test(const std::vector<double>& a,
                                        const std::vector<double>& b, int n_permutations,
                                        std::uint64_t seed) {
  return permutation_test(as_points(a), as_points(b), n_permutations, seed);
}

// Goodness-of-fit metric bundle. Perturbation of sample i is
// |pred_i - y_i| / max(|y_i|, 1e-8); ptb fields use the fraction convention.
inline FitMetrics fit_metrics(const std::vector<double>& predictions,
                              const std::vector<double>& targets) {
  if (predictions.size() != targets.size() || predictions.size() < 2)
    throw std::invalid_argument("fit_metrics: need equal lengths >= 2");
  std::size_t n = targets.size();
  double mean_y = 0.0, mean_p = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mean_y += targets[i];
    mean_p += predictions[i];
  }
  mean_y /= double(n);
  mean_p /= double(n);

  double ss_res = 0.0, ss_tot = 0.0, var_p = 0.0, cov = 0.0;
  double n_ptb = 0.0, sum_ptb = 0.0, mse_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double dy = targets[i] - mean_y;
    double dp = predictions[i] - mean_p;
    double err = predictions[i] - targets[i];
    ss_res += err * err;
    ss_tot += dy * dy;
    var_p += dp * dp;
    cov += dy * dp;
    mse_sum += err * err;
    double ptb = std::abs(err) / std::max(std::abs(targets[i]), 1e-8);
    if (ptb > 0.01) {
      n_ptb += 1.0;
      sum_ptb += ptb;
    }
  }
  if (!(ss_tot > 0.0)) throw std::invalid_argument("fit_metrics: zero target variance");

  double std_y = std::sqrt(ss_tot / double(n));
  double std_p = std::sqrt(var_p / double(n));

  FitMetrics m;
  m.loss = mse_sum / double(n);
  m.std_r = std::abs(std_y - std_p) / std_y;
  m.ptb_at_1pct = n_ptb / double(n);
  m.ptb_r_at_1pct = n_ptb > 0.0 ? sum_ptb / n_ptb : 0.0;
  m.r2 = 1.0 - ss_res / ss_tot;
  m.pearson = var_p > 0.0 ? cov / (std::sqrt(ss_tot) * std::sqrt(var_p)) : 0.0;
  return m;
}

}  // namespace shoring
