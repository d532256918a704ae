#pragma once

#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "shoring/trainer.hpp"

namespace shoring {

inline nlohmann::json to_json(const FitReport& r) {
  nlohmann::json j = {{"model", r.model_name}, {"task", r.task_name}};
  if (r.classification) {
    j["kl_loss"] = r.kl_loss;
    j["auc"] = r.auc;
    j["recall_at_p99"] = r.recall_at_p99;
  } else {
    j["loss"] = r.metrics.loss;
    j["std_r"] = r.metrics.std_r;
    j["ptb_at_1pct"] = r.metrics.ptb_at_1pct;
    j["ptb_r_at_1pct"] = r.metrics.ptb_r_at_1pct;
    j["r2"] = r.metrics.r2;
    j["pearson"] = r.metrics.pearson;
    j["mmd"] = r.two_sample.mmd_hat;
    j["p_value"] = r.two_sample.p_value;
    j["n_permutations"] = r.two_sample.n_permutations;
  }
  return j;
}

inline FitReport fit_report_from_json(const nlohmann::json& j) {
  FitReport r;
  r.model_name = j.value("model", "");
  r.task_name = j.value("task", "");
  if (j.contains("kl_loss")) {
    r.classification = true;
    r.kl_loss = j.at("kl_loss").get<double>();
    r.auc = j.value("auc", 0.0);
    r.recall_at_p99 = j.value("recall_at_p99", 0.0);
  } else {
    r.metrics.loss = j.value("loss", 0.0);
    r.metrics.std_r = j.value("std_r", 0.0);
    r.metrics.ptb_at_1pct = j.value("ptb_at_1pct", 0.0);
    r.metrics.ptb_r_at_1pct = j.value("ptb_r_at_1pct", 0.0);
    r.metrics.r2 = j.value("r2", 0.0);
    r.metrics.pearson = j.value("pearson", 0.0);
    r.two_sample.mmd_hat = j.value("mmd", 0.0);
    r.two_sample.p_value = j.value("p_value", 1.0);
    r.two_sample.n_permutations = j.value("n_permutations", 0);
  }
  return r;
}

inline void append_report_row(const std::string& path, const FitReport& r) {
  std::ofstream out(path, std::ios::app);
  if (!out) throw std::runtime_error("append_report_row: cannot open " + path);
  out << to_json(r).dump() << '\n';
}

inline std::vector<FitReport> read_report_rows(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_report_rows: cannot open " + path);
  std::vector<FitReport> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      rows.push_back(fit_report_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error("read_report_rows: " + path + ":" + std::to_string(lineno) + ": " +
                               e.what());
    }
  }
  return rows;
}

namespace detail {

struct ReportColumn {
  const char* name;
  double (*get)(const FitReport&);
  bool lower_is_better;
};

inline const std::vector<ReportColumn>& regression_columns() {
  static const std::vector<ReportColumn> cols = {
      {"loss", [](const FitReport& r) { return r.metrics.loss; }, true},
      {"std_r", [](const FitReport& r) { return r.metrics.std_r; }, true},
      {"ptb@1%", [](const FitReport& r) { return r.metrics.ptb_at_1pct; }, true},
      {"ptb_r@1%", [](const FitReport& r) { return r.metrics.ptb_r_at_1pct; }, true},
      {"r2", [](const FitReport& r) { return r.metrics.r2; }, false},
      {"pearson", [](const FitReport& r) { return r.metrics.pearson; }, false},
      {"p_value", [](const FitReport& r) { return r.two_sample.p_value; }, false},
  };
  return cols;
}

inline std::string fmt(double x) {
  std::ostringstream os;
  os << std::setprecision(4) << std::fixed << x;
  return os.str();
}

}  // namespace detail

// Renders regression report rows as "json", "csv" or "md". The markdown table
// bolds the best value per metric column within each task group.
inline std::string render_report(const std::vector<FitReport>& rows, const std::string& format) {
  const auto& cols = detail::regression_columns();
  if (format == "json") {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : rows) arr.push_back(to_json(r));
    return arr.dump(2) + "\n";
  }
  if (format == "csv") {
    std::ostringstream os;
    os << "task,model";
    for (const auto& c : cols) os << ',' << c.name;
    os << '\n';
    for (const auto& r : rows) {
      os << r.task_name << ',' << r.model_name;
      for (const auto& c : cols) os << ',' << detail::fmt(c.get(r));
      os << '\n';
    }
    return os.str();
  }
  if (format != "md") throw std::invalid_argument("render_report: unknown format '" + format + "'");

  // best row per (task, column)
  auto is_best = [&](std::size_t i, const detail::ReportColumn& c) {
    double v = c.get(rows[i]);
    for (std::size_t j = 0; j < rows.size(); ++j) {
      if (rows[j].task_name != rows[i].task_name) continue;
      double w = c.get(rows[j]);
      if (c.lower_is_better ? w < v : w > v) return false;
    }
    return true;
  };

  std::ostringstream os;
  os << "| task | model ";
  for (const auto& c : cols) os << "| " << c.name << ' ';
  os << "|\n|---|---";
  for (std::size_t i = 0; i < cols.size(); ++i) os << "|---";
  os << "|\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    os << "| " << rows[i].task_name << " | " << rows[i].model_name << ' ';
    for (const auto& c : cols) {
      std::string s = detail::fmt(c.get(rows[i]));
      os << "| " << (is_best(i, c) ? "**" + s + "**" : s) << ' ';
    }
    os << "|\n";
  }
  return os.str();
}

}  // namespace shoring
