#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "shoring/data.hpp"

namespace shoring {

inline constexpr const char* kSchemaVersion = "1";

inline nlohmann::json to_json(const GeneratorConfig& c) {
  return nlohmann::json{{"n_samples", c.n_samples},
                        {"m", c.m},
                        {"cat_vocab_sizes", c.cat_vocab_sizes},
                        {"min_len", c.min_len},
                        {"max_len", c.max_len},
                        {"zipf_s", c.zipf_s},
                        {"num_mu", c.num_mu},
                        {"num_sigma", c.num_sigma},
                        {"mean_gap_hours", c.mean_gap_hours},
                        {"start_window_hours", c.start_window_hours},
                        {"seed", c.seed}};
}

inline GeneratorConfig generator_config_from_json(const nlohmann::json& j) {
  GeneratorConfig c;
  c.n_samples = j.value("n_samples", c.n_samples);
  c.m = j.value("m", c.m);
  c.cat_vocab_sizes = j.value("cat_vocab_sizes", c.cat_vocab_sizes);
  c.min_len = j.value("min_len", c.min_len);
  c.max_len = j.value("max_len", c.max_len);
  c.zipf_s = j.value("zipf_s", c.zipf_s);
  c.num_mu = j.value("num_mu", c.num_mu);
  c.num_sigma = j.value("num_sigma", c.num_sigma);
  c.mean_gap_hours = j.value("mean_gap_hours", c.mean_gap_hours);
  c.start_window_hours = j.value("start_window_hours", c.start_window_hours);
  c.seed = j.value("seed", c.seed);
  return c;
}

inline nlohmann::json event_to_json(const Event& e) {
  return nlohmann::json{{"cat", e.cat}, {"num", e.num}, {"t", e.t}};
}

inline nlohmann::json sample_to_json(const Sample& s) {
  nlohmann::json seqs = nlohmann::json::array();
  for (const auto& seq : s.sequences) {
    nlohmann::json events = nlohmann::json::array();
    for (const auto& e : seq.events) events.push_back(event_to_json(e));
    seqs.push_back(std::move(events));
  }
  return nlohmann::json{{"label", s.label}, {"sequences", std::move(seqs)}};
}

// One JSON object per line per sample. Doubles round-trip via nlohmann's
// shortest-decimal output, so read(write(d)) == d exactly.
inline void write_jsonl(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_jsonl: cannot open " + path);
  for (const auto& s : ds) out << sample_to_json(s).dump() << '\n';
  if (!out) throw std::runtime_error("write_jsonl: write failed for " + path);
}

inline void write_dataset_header(const GeneratorConfig& cfg, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_dataset_header: cannot open " + path);
  out << nlohmann::json{{"schema_version", kSchemaVersion},
                        {"generator_config", to_json(cfg)}}
             .dump(2)
      << '\n';
}

inline GeneratorConfig read_dataset_header(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_dataset_header: cannot open " + path);
  nlohmann::json j = nlohmann::json::parse(in);
  std::string version = j.value("schema_version", "");
  if (version != kSchemaVersion)
    throw std::runtime_error("read_dataset_header: schema version mismatch, got '" + version +
                             "', expected '" + kSchemaVersion + "'");
  return generator_config_from_json(j.at("generator_config"));
}

inline Dataset read_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_jsonl: cannot open " + path);
  Dataset ds;
  std::string line;
  std::size_t lineno = 0;
  std::int64_t next_seq_id = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw std::runtime_error("read_jsonl: parse error at line " + std::to_string(lineno) +
                               ": " + e.what());
    }
    Sample s;
    try {
      s.label = j.at("label").get<double>();
      for (const auto& seq_j : j.at("sequences")) {
        Sequence seq;
        seq.sequence_id = next_seq_id++;
        for (const auto& e_j : seq_j) {
          Event e;
          e.cat = e_j.at("cat").get<std::vector<int>>();
          e.num = e_j.at("num").get<std::vector<double>>();
          e.t = e_j.at("t").get<double>();
          seq.events.push_back(std::move(e));
        }
        s.sequences.push_back(std::move(seq));
      }
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error("read_jsonl: schema error at line " + std::to_string(lineno) +
                               ": " + e.what());
    }
    ds.push_back(std::move(s));
  }
  return ds;
}

}  // namespace shoring
