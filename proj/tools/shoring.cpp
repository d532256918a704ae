// Command-line pipeline: generate synthetic event data, run symbolic tests
// over (model, expression) cells, train single models, render report tables.
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "shoring/checkpoint.hpp"
#include "shoring/io.hpp"
#include "shoring/report.hpp"
#include "shoring/sha256.hpp"
#include "shoring/symbolic.hpp"
#include "shoring/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace shoring;

static constexpr const char* kToolVersion = "0.1.0";

// ---- config plumbing -------------------------------------------------------

static json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file " + path);
  return json::parse(in);
}

// --set key=value overrides; values parsed as JSON when possible, else string
static void apply_overrides(json& cfg, const std::vector<std::string>& sets) {
  for (const auto& kv : sets) {
    auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
    std::string key = kv.substr(0, eq), val = kv.substr(eq + 1);
    json parsed;
    try {
      parsed = json::parse(val);
    } catch (const json::parse_error&) {
      parsed = val;
    }
    cfg[key] = parsed;
  }
}

template <typename T>
static T cfg_get(const json& cfg, const std::string& key, T fallback) {
  if (!cfg.contains(key)) return fallback;
  try {
    return cfg.at(key).get<T>();
  } catch (const json::exception&) {
    throw std::invalid_argument("config key '" + key + "' has the wrong type");
  }
}

static void reject_unknown_keys(const json& cfg, const std::set<std::string>& known) {
  for (const auto& [key, value] : cfg.items())
    if (!known.count(key)) throw std::invalid_argument("unknown config key '" + key + "'");
}

static int worker_cap(int jobs_flag) {
  int cap = jobs_flag > 0 ? jobs_flag : 1;
  if (const char* env = std::getenv("SHORING_THREADS")) {
    int e = std::atoi(env);
    if (e > 0) cap = std::min(cap, e);
  }
  return cap;
}

struct ManifestWriter {
  json j;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

  ManifestWriter(const std::string& command, json resolved_config) {
    j["command"] = command;
    j["config"] = std::move(resolved_config);
    j["tool_version"] = kToolVersion;
    j["artifacts"] = json::array();
    j["seeds"] = json::object();
  }
  void artifact(const std::string& path) { j["artifacts"].push_back(path); }
  void seed(const std::string& name, std::uint64_t s) { j["seeds"][name] = s; }
  void write(const std::string& path) {
    j["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write manifest " + path);
    out << j.dump(2) << '\n';
  }
};

// ---- shared dataset loading -------------------------------------------------

struct LoadedData {
  GeneratorConfig gen;
  Dataset train, test;
  EncoderSpec enc;
  double median_gap = 1.0;
};

static double median_inter_arrival(const Dataset& ds) {
  std::vector<double> gaps;
  for (const auto& s : ds)
    for (const auto& seq : s.sequences)
      for (std::size_t i = 1; i < seq.events.size(); ++i)
        gaps.push_back(seq.events[i].t - seq.events[i - 1].t);
  if (gaps.empty()) return 1.0;
  std::nth_element(gaps.begin(), gaps.begin() + long(gaps.size() / 2), gaps.end());
  return std::max(gaps[gaps.size() / 2], 1e-9);
}

static LoadedData load_data_dir(const std::string& dir) {
  LoadedData d;
  d.gen = read_dataset_header(dir + "/header.json");
  d.train = read_jsonl(dir + "/train.jsonl");
  d.test = read_jsonl(dir + "/test.jsonl");
  std::ifstream enc_in(dir + "/encoder.json");
  if (!enc_in) throw std::invalid_argument("missing fitted encoder " + dir + "/encoder.json");
  d.enc = encoder_spec_from_json(json::parse(enc_in));
  d.median_gap = median_inter_arrival(d.train);
  return d;
}

// ---- gen --------------------------------------------------------------------

static int cmd_gen(const std::string& config_path, const std::string& out_dir,
                   std::uint64_t seed_flag, bool seed_set,
                   const std::vector<std::string>& sets) {
  json cfg = load_config(config_path);
  apply_overrides(cfg, sets);
  reject_unknown_keys(cfg, {"n_samples", "m", "cat_vocab_sizes", "min_len", "max_len", "zipf_s",
                            "num_mu", "num_sigma", "mean_gap_hours", "start_window_hours", "seed",
                            "train_fraction", "lowfreq_cutoff"});
  GeneratorConfig gen = generator_config_from_json(cfg);
  if (seed_set) gen.seed = seed_flag;
  double train_fraction = cfg_get(cfg, "train_fraction", 2.0 / 3.0);
  int lowfreq_cutoff = cfg_get(cfg, "lowfreq_cutoff", 5);
  gen.validate();

  fs::create_directories(out_dir);
  ManifestWriter mf("gen", to_json(gen));
  mf.j["config"]["train_fraction"] = train_fraction;
  mf.j["config"]["lowfreq_cutoff"] = lowfreq_cutoff;
  mf.seed("generator", gen.seed);

  Dataset ds = generate_dataset(gen);
  write_jsonl(ds, out_dir + "/data.jsonl");
  write_dataset_header(gen, out_dir + "/header.json");
  auto [train, test] = split(ds, train_fraction, gen.seed ^ 0x5b17);
  write_jsonl(train, out_dir + "/train.jsonl");
  write_jsonl(test, out_dir + "/test.jsonl");
  auto [stats, enc] = fit_encoder(train, lowfreq_cutoff);
  {
    std::ofstream out(out_dir + "/encoder.json");
    out << to_json(enc).dump(2) << '\n';
  }
  mf.j["dataset_hash"] = sha256_file_hex(out_dir + "/data.jsonl");
  for (const char* f : {"data.jsonl", "header.json", "train.jsonl", "test.jsonl", "encoder.json"})
    mf.artifact(out_dir + "/" + std::string(f));
  mf.write(out_dir + "/manifest.json");
  std::cout << "wrote " << ds.size() << " samples to " << out_dir << " (hash "
            << mf.j["dataset_hash"].get<std::string>().substr(0, 12) << ")\n";
  return 0;
}

// ---- training shared by symtest/train ---------------------------------------

struct CellConfig {
  TrainConfig train;
  ModelSpec model;
  std::size_t tau = 50;
};

static CellConfig cell_config(const json& cfg, Architecture arch, std::uint64_t seed,
                              std::size_t max_len) {
  reject_unknown_keys(cfg, {"lr", "batch", "epochs", "patience", "k", "d_s", "heads", "hidden",
                            "d_emb", "n_terms", "tau", "tracked_fields", "pooling"});
  CellConfig c;
  c.train.learning_rate = cfg_get(cfg, "lr", 1e-3);
  c.train.batch_size = cfg_get(cfg, "batch", 128);
  c.train.max_epochs = cfg_get(cfg, "epochs", 60);
  c.train.patience = cfg_get(cfg, "patience", 5);
  c.train.seed = seed;
  c.model.arch = arch;
  c.model.k = cfg_get(cfg, "k", 16);
  c.model.d_s = cfg_get(cfg, "d_s", 16);
  c.model.heads = cfg_get(cfg, "heads", 2);
  c.model.hidden = cfg_get(cfg, "hidden", 128);
  c.model.d_emb = cfg_get(cfg, "d_emb", 16);
  c.model.n_terms = cfg_get(cfg, "n_terms", 12);
  c.model.tracked_fields = cfg_get(cfg, "tracked_fields", c.model.tracked_fields);
  if (cfg_get(cfg, "pooling", std::string("mean")) == "sum") c.model.pooling = Pooling::Sum;
  c.tau = std::size_t(cfg_get(cfg, "tau", int(max_len)));
  return c;
}

static FitReport run_cell(const LoadedData& d, const SymbolicExpr& expr, const CellConfig& cc) {
  ExprLabelSet train_labels = label_dataset(expr, d.train);
  ExprLabelSet test_labels =
      label_dataset(expr, d.test, std::make_pair(train_labels.mean, train_labels.stddev));
  auto enc_train = encode_dataset(d.train, d.enc, cc.model, cc.tau, train_labels.standardized);
  auto enc_test = encode_dataset(d.test, d.enc, cc.model, cc.tau, test_labels.standardized);
  Model model(cc.model, d.enc, cc.train.seed);
  TrainResult tr = train(std::move(model), enc_train, cc.train);
  if (tr.diverged) std::cerr << "warning: training diverged, evaluating last good checkpoint\n";
  FitReport rep = evaluate(tr.best, enc_test, LossKind::Mse, 199, cc.train.seed);
  rep.task_name = expr.name();
  return rep;
}

// ---- symtest ----------------------------------------------------------------

static int cmd_symtest(const std::string& data_dir, const std::string& out_dir,
                       const std::string& models_csv, const std::string& exprs_csv,
                       std::uint64_t seed, const std::string& config_path,
                       const std::vector<std::string>& sets, int jobs) {
  (void)worker_cap(jobs);  // cells run sequentially; the cap is honored trivially
  auto split_csv = [](const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
      if (!item.empty()) out.push_back(item);
    return out;
  };
  auto model_names = split_csv(models_csv);
  auto expr_names = split_csv(exprs_csv);
  if (model_names.empty()) throw std::invalid_argument("empty model list");
  if (expr_names.empty()) throw std::invalid_argument("empty expression list");

  json cfg = load_config(config_path);
  apply_overrides(cfg, sets);

  LoadedData d = load_data_dir(data_dir);
  fs::create_directories(out_dir);
  std::string rows_path = out_dir + "/rows.jsonl";

  // resume: skip (model, task) cells already present in the row file
  std::set<std::pair<std::string, std::string>> done;
  if (fs::exists(rows_path))
    for (const auto& r : read_report_rows(rows_path)) done.insert({r.model_name, r.task_name});

  ManifestWriter mf("symtest", cfg);
  mf.seed("train", seed);
  mf.j["dataset_hash"] = sha256_file_hex(data_dir + "/data.jsonl");
  mf.j["models"] = model_names;
  mf.j["exprs"] = expr_names;
  mf.artifact(rows_path);

  for (const auto& en : expr_names) {
    SymbolicExpr expr = task_by_name(en, d.gen.seed, d.median_gap);
    for (const auto& mn : model_names) {
      Architecture arch = architecture_from_string(mn);
      if (done.count({mn, expr.name()})) {
        std::cout << "skip " << mn << " / " << expr.name() << " (already in " << rows_path << ")\n";
        continue;
      }
      CellConfig cc = cell_config(cfg, arch, seed, std::size_t(d.gen.max_len));
      std::cout << "running " << mn << " / " << expr.name() << " ...\n" << std::flush;
      FitReport rep = run_cell(d, expr, cc);
      append_report_row(rows_path, rep);
      std::cout << "  r2=" << rep.metrics.r2 << " p=" << rep.two_sample.p_value << '\n';
    }
  }
  mf.write(out_dir + "/manifest.json");
  return 0;
}

// ---- train ------------------------------------------------------------------

static int cmd_train(const std::string& data_dir, const std::string& out_dir,
                     const std::string& model_name, const std::string& expr_name,
                     std::uint64_t seed, const std::string& config_path,
                     const std::vector<std::string>& sets) {
  json cfg = load_config(config_path);
  apply_overrides(cfg, sets);
  LoadedData d = load_data_dir(data_dir);
  Architecture arch = architecture_from_string(model_name);
  SymbolicExpr expr = task_by_name(expr_name, d.gen.seed, d.median_gap);
  CellConfig cc = cell_config(cfg, arch, seed, std::size_t(d.gen.max_len));

  fs::create_directories(out_dir);
  ManifestWriter mf("train", cfg);
  mf.seed("train", seed);
  mf.j["dataset_hash"] = sha256_file_hex(data_dir + "/data.jsonl");
  mf.j["model"] = model_name;
  mf.j["expr"] = expr.name();

  ExprLabelSet labels = label_dataset(expr, d.train);
  auto enc_train = encode_dataset(d.train, d.enc, cc.model, cc.tau, labels.standardized);
  Model model(cc.model, d.enc, seed);
  TrainResult tr = train(std::move(model), enc_train, cc.train);

  std::string ckpt = out_dir + "/model.ckpt", log = out_dir + "/train_log.jsonl";
  save_checkpoint(tr.best, ckpt);
  {
    std::ofstream out(log);
    for (const auto& e : tr.log)
      out << json{{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"val_loss", e.val_loss},
                  {"wall_time", e.wall_time_s}}
                 .dump()
          << '\n';
  }
  mf.artifact(ckpt);
  mf.artifact(log);
  mf.j["best_val_loss"] = tr.best_val_loss;
  mf.j["diverged"] = tr.diverged;
  mf.write(out_dir + "/manifest.json");
  std::cout << "best val loss " << tr.best_val_loss << ", checkpoint " << ckpt << '\n';
  return tr.diverged ? 3 : 0;
}

// ---- report -----------------------------------------------------------------

static int cmd_report(const std::string& rows_path, const std::string& format,
                      const std::string& out_path) {
  if (format != "json" && format != "csv" && format != "md")
    throw std::invalid_argument("unknown format '" + format + "' (expected json|csv|md)");
  auto rows = read_report_rows(rows_path);
  if (rows.empty()) throw std::invalid_argument("no rows in " + rows_path);
  std::string rendered = render_report(rows, format);
  if (out_path.empty()) {
    std::cout << rendered;
  } else {
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot write " + out_path);
    out << rendered;
  }
  return 0;
}

// ---- main -------------------------------------------------------------------

int main(int argc, char** argv) {
  CLI::App app{"symbolic-testing laboratory for high-order sequence models"};
  app.require_subcommand(1);

  std::string config_path, out_dir, data_dir, rows_path, out_path;
  std::string models = "SA,SSA,SHORIN,SHORING";
  std::string exprs = "sum,count,average,decay_sum,decay_count,decay_average,ratio_sum_sum,"
                      "ratio_count_count,ratio_sum_average,count_distinct";
  std::string model_one = "SHORING", expr_one = "sum", format = "md";
  std::uint64_t seed = 1;
  int jobs = 1;
  std::vector<std::string> sets;

  auto* gen = app.add_subcommand("gen", "generate a synthetic dataset directory");
  gen->add_option("--config", config_path, "generator config JSON");
  gen->add_option("--out", out_dir, "output directory")->required();
  auto* gen_seed = gen->add_option("--seed", seed, "generator seed override");
  gen->add_option("--set", sets, "key=value config overrides");

  auto* sym = app.add_subcommand("symtest", "train and evaluate (model, expression) cells");
  sym->add_option("--data", data_dir, "dataset directory from gen")->required();
  sym->add_option("--out", out_dir, "output directory")->required();
  sym->add_option("--models", models, "comma-separated model list");
  sym->add_option("--exprs", exprs, "comma-separated expression list");
  sym->add_option("--seed", seed, "training seed");
  sym->add_option("--config", config_path, "training config JSON");
  sym->add_option("--set", sets, "key=value config overrides");
  sym->add_option("--jobs", jobs, "worker cap (also capped by SHORING_THREADS)");

  auto* trn = app.add_subcommand("train", "train one model on one expression");
  trn->add_option("--data", data_dir, "dataset directory from gen")->required();
  trn->add_option("--out", out_dir, "output directory")->required();
  trn->add_option("--model", model_one, "architecture name");
  trn->add_option("--expr", expr_one, "expression name");
  trn->add_option("--seed", seed, "training seed");
  trn->add_option("--config", config_path, "training config JSON");
  trn->add_option("--set", sets, "key=value config overrides");

  auto* rep = app.add_subcommand("report", "render a report-row file as a table");
  rep->add_option("--rows", rows_path, "rows.jsonl from symtest")->required();
  rep->add_option("--format", format, "json|csv|md");
  rep->add_option("--out", out_path, "write here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;  // usage errors are exit 2
  }

  try {
    if (gen->parsed()) return cmd_gen(config_path, out_dir, seed, gen_seed->count() > 0, sets);
    if (sym->parsed()) return cmd_symtest(data_dir, out_dir, models, exprs, seed, config_path, sets, jobs);
    if (trn->parsed()) return cmd_train(data_dir, out_dir, model_one, expr_one, seed, config_path, sets);
    if (rep->parsed()) return cmd_report(rows_path, format, out_path);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 2;
}
