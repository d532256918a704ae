#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "shoring/checkpoint.hpp"
#include "shoring/io.hpp"
#include "shoring/report.hpp"
#include "shoring/sha256.hpp"
#include "shoring/symbolic.hpp"

using namespace shoring;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("shoring_io_" + std::to_string(std::rand()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("dataset jsonl round-trips exactly") {
  GeneratorConfig cfg;
  cfg.n_samples = 30;
  cfg.seed = 11;
  Dataset ds = generate_dataset(cfg);
  TempDir td;
  write_jsonl(ds, td.file("d.jsonl"));
  Dataset back = read_jsonl(td.file("d.jsonl"));
  REQUIRE(back.size() == ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    REQUIRE(back[i].label == ds[i].label);
    REQUIRE(back[i].sequences.size() == ds[i].sequences.size());
    for (std::size_t q = 0; q < ds[i].sequences.size(); ++q) {
      const auto& a = ds[i].sequences[q].events;
      const auto& b = back[i].sequences[q].events;
      REQUIRE(a.size() == b.size());
      for (std::size_t e = 0; e < a.size(); ++e) {
        REQUIRE(a[e].cat == b[e].cat);
        REQUIRE(a[e].num == b[e].num);  // exact double round-trip
        REQUIRE(a[e].t == b[e].t);
      }
    }
  }
}

TEST_CASE("jsonl reader reports the offending line number") {
  TempDir td;
  {
    std::ofstream out(td.file("bad.jsonl"));
    out << R"({"label": 1.0, "sequences": []})" << '\n';
    out << "{this is not json\n";
  }
  REQUIRE_THROWS_WITH(read_jsonl(td.file("bad.jsonl")),
                      Catch::Matchers::ContainsSubstring("line 2"));
  {
    std::ofstream out(td.file("schema.jsonl"));
    out << R"({"label": 1.0})" << '\n';
  }
  REQUIRE_THROWS_WITH(read_jsonl(td.file("schema.jsonl")),
                      Catch::Matchers::ContainsSubstring("line 1"));
  REQUIRE_THROWS_AS(read_jsonl(td.file("missing.jsonl")), std::runtime_error);
}

TEST_CASE("empty jsonl file gives an empty dataset") {
  TempDir td;
  std::ofstream(td.file("empty.jsonl")).close();
  REQUIRE(read_jsonl(td.file("empty.jsonl")).empty());
}

TEST_CASE("dataset header round-trips and rejects other schema versions") {
  GeneratorConfig cfg;
  cfg.n_samples = 7;
  cfg.zipf_s = 1.3;
  cfg.cat_vocab_sizes = {5, 5, 5, 5, 5, 5, 5, 5, 5};
  TempDir td;
  write_dataset_header(cfg, td.file("header.json"));
  GeneratorConfig back = read_dataset_header(td.file("header.json"));
  REQUIRE(to_json(back) == to_json(cfg));
  {
    std::ofstream out(td.file("old.json"));
    out << R"({"schema_version": "0", "generator_config": {}})";
  }
  REQUIRE_THROWS_WITH(read_dataset_header(td.file("old.json")),
                      Catch::Matchers::ContainsSubstring("schema version"));
}

TEST_CASE("generator config json ignores unknown keys but keeps values") {
  nlohmann::json j = {{"n_samples", 42}, {"zipf_s", 2.5}};
  GeneratorConfig c = generator_config_from_json(j);
  REQUIRE(c.n_samples == 42);
  REQUIRE(c.zipf_s == 2.5);
  REQUIRE(c.min_len == GeneratorConfig{}.min_len);
}

TEST_CASE("checkpoint round-trips parameter values and the model descriptor") {
  GeneratorConfig gcfg;
  gcfg.n_samples = 10;
  gcfg.seed = 3;
  Dataset ds = generate_dataset(gcfg);
  auto [stats, enc] = fit_encoder(ds, 2);
  ModelSpec spec;
  spec.arch = Architecture::SHORING;
  spec.k = 4;
  spec.d_s = 4;
  spec.heads = 1;
  spec.hidden = 8;
  spec.d_emb = 2;
  spec.n_terms = 4;
  Model m(spec, enc, 77);
  TempDir td;
  save_checkpoint(m, td.file("m.ckpt"));
  Model back = load_checkpoint(td.file("m.ckpt"));
  REQUIRE(back.params.names == m.params.names);
  for (std::size_t i = 0; i < m.params.size(); ++i) {
    REQUIRE(back.params.values[i].shape == m.params.values[i].shape);
    REQUIRE(back.params.values[i].v == m.params.values[i].v);
  }
  REQUIRE(to_json(back.spec) == to_json(m.spec));
}

TEST_CASE("checkpoint loader rejects a bad magic header") {
  TempDir td;
  {
    std::ofstream out(td.file("junk.ckpt"), std::ios::binary);
    out << "NOTACKPT and some trailing bytes";
  }
  REQUIRE_THROWS_WITH(load_checkpoint(td.file("junk.ckpt")),
                      Catch::Matchers::ContainsSubstring("magic"));
  REQUIRE_THROWS_AS(load_checkpoint(td.file("absent.ckpt")), std::runtime_error);
}

TEST_CASE("fit report rows round-trip through jsonl") {
  FitReport r;
  r.model_name = "SA";
  r.task_name = "sum";
  r.metrics.loss = 0.125;
  r.metrics.r2 = 0.875;
  r.metrics.pearson = 0.9375;
  r.two_sample.p_value = 0.42;
  r.two_sample.n_permutations = 199;
  TempDir td;
  append_report_row(td.file("rows.jsonl"), r);
  append_report_row(td.file("rows.jsonl"), r);
  auto rows = read_report_rows(td.file("rows.jsonl"));
  REQUIRE(rows.size() == 2);
  REQUIRE(rows[1].model_name == "SA");
  REQUIRE(rows[1].task_name == "sum");
  REQUIRE(rows[1].metrics.loss == 0.125);
  REQUIRE(rows[1].metrics.r2 == 0.875);
  REQUIRE(rows[1].two_sample.p_value == 0.42);
}

TEST_CASE("report renderer covers json, csv and markdown") {
  FitReport a, b;
  a.model_name = "SA";
  a.task_name = "sum";
  a.metrics.loss = 0.5;
  a.metrics.r2 = 0.7;
  b.model_name = "SHORING";
  b.task_name = "sum";
  b.metrics.loss = 0.25;
  b.metrics.r2 = 0.9;
  std::string md = render_report({a, b}, "md");
  // best value per column is bold in markdown
  REQUIRE(md.find("**0.2500**") != std::string::npos);
  REQUIRE(md.find("**0.9000**") != std::string::npos);
  std::string csv = render_report({a, b}, "csv");
  REQUIRE(csv.find("SHORING") != std::string::npos);
  REQUIRE(csv.find(',') != std::string::npos);
  auto parsed = nlohmann::json::parse(render_report({a, b}, "json"));
  REQUIRE(parsed.is_array());
  REQUIRE(parsed.size() == 2);
  REQUIRE_THROWS_AS(render_report({a, b}, "pdf"), std::invalid_argument);
}

TEST_CASE("sha256 matches known vectors") {
  REQUIRE(sha256_hex("") ==
          "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  REQUIRE(sha256_hex("abc") ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  TempDir td;
  {
    std::ofstream out(td.file("abc.txt"), std::ios::binary);
    out << "abc";
  }
  REQUIRE(sha256_file_hex(td.file("abc.txt")) == sha256_hex("abc"));
}
