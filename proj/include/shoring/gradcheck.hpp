#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "shoring/autodiff.hpp"
#include "shoring/tensor.hpp"

namespace shoring {

struct GradCheckEntry {
  std::string name;
  double max_rel_err = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double max_rel_err = 0.0;
  bool passed = false;
  double tol = 0.0;
};

// Builder maps the current parameter values to a scalar loss on a fresh tape.
// It must be deterministic; two forward evaluations are compared to detect
// randomized builders.
using LossBuilder =
    std::function<Var(Tape&, const std::vector<Var>& params)>;

inline double forward_loss(const LossBuilder& builder, const std::vector<Tensor>& params) {
  Tape t;
  std::vector<Var> vars;
  vars.reserve(params.size());
  for (const auto& p : params) vars.push_back(t.leaf(p, true));
  return t.value(builder(t, vars)).v[0];
}

// Compares analytic gradients to central finite differences
// (f(theta+h) - f(theta-h)) / 2h, elementwise. Relative error denominator is
// max(|analytic|, |numeric|, 1e-6): gradient components below 1e-6 are
// compared absolutely, because central differences at step h carry round-off
// noise of order eps_machine / (2h) ~ 5e-12, which would otherwise dominate
// the ratio for genuinely tiny gradients.
inline GradCheckReport gradient_check(const LossBuilder& builder, std::vector<Tensor> params,
                                      const std::vector<std::string>& names, double step,
                                      double tol) {
  if (!(step > 0.0)) throw std::invalid_argument("gradient_check: step must be positive");
  double f0 = forward_loss(builder, params);
  double f1 = forward_loss(builder, params);
  if (f0 != f1)
    throw std::runtime_error(
        "gradient_check: builder is not deterministic (two forward evals differ)");

  // analytic pass
  Tape t;
  std::vector<Var> vars;
  for (const auto& p : params) vars.push_back(t.leaf(p, true));
  Var loss = builder(t, vars);
  t.backward(loss);

  GradCheckReport report;
  report.tol = tol;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    GradCheckEntry e;
    e.name = pi < names.size() ? names[pi] : ("param" + std::to_string(pi));
    const Tensor& g = t.grad(vars[pi]);
    for (std::size_t i = 0; i < params[pi].numel(); ++i) {
      double orig = params[pi].v[i];
      params[pi].v[i] = orig + step;
      double fp = forward_loss(builder, params);
      params[pi].v[i] = orig - step;
      double fm = forward_loss(builder, params);
      params[pi].v[i] = orig;
      double num = (fp - fm) / (2.0 * step);
      double ana = g.v[i];
      double denom = std::max({std::abs(ana), std::abs(num), 1e-6});
      e.max_rel_err = std::max(e.max_rel_err, std::abs(ana - num) / denom);
    }
    report.max_rel_err = std::max(report.max_rel_err, e.max_rel_err);
    report.entries.push_back(std::move(e));
  }
  report.passed = report.max_rel_err <= tol;
  return report;
}

}  // namespace shoring
