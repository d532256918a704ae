#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "shoring/init.hpp"
#include "shoring/symbolic.hpp"
#include "shoring/trainer.hpp"

using namespace shoring;

namespace {

struct Fixture {
  Dataset train;
  EncoderSpec enc;
  ModelSpec spec;
  std::vector<EncodedSample> samples;
};

Fixture make_fixture(Architecture arch, int n = 40, std::uint64_t seed = 7) {
  Fixture f;
  GeneratorConfig cfg;
  cfg.n_samples = n;
  cfg.min_len = 5;
  cfg.max_len = 10;
  cfg.seed = seed;
  f.train = generate_dataset(cfg);
  auto [stats, enc] = fit_encoder(f.train, 2);
  f.enc = enc;
  f.spec.arch = arch;
  f.spec.k = 4;
  f.spec.d_s = 4;
  f.spec.heads = 1;
  f.spec.hidden = 8;
  f.spec.d_emb = 2;
  f.spec.n_terms = 4;
  SymbolicExpr e;
  e.op = SymbolicOp::Sum;
  e.value_selector = ValueSelector::N1;
  ExprLabelSet ls = label_dataset(e, f.train);
  f.samples = encode_dataset(f.train, f.enc, f.spec, 10, ls.standardized);
  return f;
}

TrainConfig quick_config() {
  TrainConfig c;
  c.learning_rate = 3e-3;
  c.batch_size = 8;
  c.max_epochs = 5;
  c.patience = 10;
  c.seed = 3;
  return c;
}

}  // namespace

TEST_CASE("orthogonal init produces orthonormal columns and rows") {
  Tensor sq = orthogonal_init(4, 4, 1);
  EMat q = as_mat(sq);
  REQUIRE(((q.transpose() * q) - EMat::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-8);
  Tensor wide = orthogonal_init(2, 6, 1);
  EMat w = as_mat(wide);
  REQUIRE(((w * w.transpose()) - EMat::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-8);
  REQUIRE(orthogonal_init(5, 3, 9).v == orthogonal_init(5, 3, 9).v);
  REQUIRE(orthogonal_init(5, 3, 9).v != orthogonal_init(5, 3, 10).v);
}

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
  std::vector<Tensor> params = {Tensor({2}, {1.0, -2.0})};
  std::vector<Tensor> grads = {Tensor::zeros({2})};
  AdamState st;
  st.init_like(params);
  adam_step(params, grads, st, 1, quick_config());
  REQUIRE(params[0].v == std::vector<double>{1.0, -2.0});
}

TEST_CASE("adam first step magnitude is about lr * sign(g)") {
  TrainConfig cfg = quick_config();
  cfg.learning_rate = 0.1;
  std::vector<Tensor> params = {Tensor({2}, {0.0, 0.0})};
  std::vector<Tensor> grads = {Tensor({2}, {3.0, -0.5})};
  AdamState st;
  st.init_like(params);
  adam_step(params, grads, st, 1, cfg);
  // bias-corrected m/sqrt(v) = g/|g| at t=1 (up to adam_eps)
  REQUIRE(params[0].v[0] == Catch::Approx(-0.1).epsilon(1e-6));
  REQUIRE(params[0].v[1] == Catch::Approx(0.1).epsilon(1e-6));
}

TEST_CASE("adam aborts on a NaN gradient naming the parameter") {
  std::vector<Tensor> params = {Tensor({1}, {0.0})};
  std::vector<Tensor> grads = {Tensor({1}, {std::nan("")})};
  AdamState st;
  st.init_like(params);
  REQUIRE_THROWS_WITH(adam_step(params, grads, st, 1, quick_config(), {"head.w1"}),
                      Catch::Matchers::ContainsSubstring("head.w1"));
}

TEST_CASE("model construction is seed-deterministic per architecture") {
  Fixture f = make_fixture(Architecture::SHORING);
  Model a(f.spec, f.enc, 5), b(f.spec, f.enc, 5), c(f.spec, f.enc, 6);
  REQUIRE(a.params.names == b.params.names);
  for (std::size_t i = 0; i < a.params.size(); ++i)
    REQUIRE(a.params.values[i].v == b.params.values[i].v);
  bool any_diff = false;
  for (std::size_t i = 0; i < a.params.size(); ++i)
    any_diff = any_diff || a.params.values[i].v != c.params.values[i].v;
  REQUIRE(any_diff);
}

TEST_CASE("every initialized weight matrix is orthonormal") {
  Fixture f = make_fixture(Architecture::SHORING);
  Model m(f.spec, f.enc, 5);
  for (std::size_t i = 0; i < m.params.size(); ++i) {
    const Tensor& p = m.params.values[i];
    const std::string& n = m.params.names[i];
    if (p.shape.size() != 2) continue;
    if (n.find("embed") != std::string::npos || n.find("ev.u") != std::string::npos)
      continue;  // gaussian by design
    EMat q = as_mat(p);
    EMat gram = q.rows() >= q.cols() ? EMat(q.transpose() * q) : EMat(q * q.transpose());
    REQUIRE((gram - EMat::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("lr = 0 is rejected; tiny lr keeps losses near-constant") {
  Fixture f = make_fixture(Architecture::SA);
  TrainConfig cfg = quick_config();
  cfg.learning_rate = 0.0;
  REQUIRE_THROWS_AS(train(Model(f.spec, f.enc, 1), f.samples, cfg), std::invalid_argument);
  cfg.learning_rate = 1e-15;
  cfg.max_epochs = 3;
  TrainResult r = train(Model(f.spec, f.enc, 1), f.samples, cfg);
  for (const auto& e : r.log)
    REQUIRE(e.val_loss == Catch::Approx(r.log[0].val_loss).epsilon(1e-6));
}

TEST_CASE("training is deterministic given (seed, config, data)") {
  Fixture f = make_fixture(Architecture::SHORING, 24);
  TrainConfig cfg = quick_config();
  cfg.max_epochs = 3;
  TrainResult r1 = train(Model(f.spec, f.enc, 1), f.samples, cfg);
  TrainResult r2 = train(Model(f.spec, f.enc, 1), f.samples, cfg);
  REQUIRE(r1.best_val_loss == r2.best_val_loss);
  for (std::size_t i = 0; i < r1.best.params.size(); ++i)
    REQUIRE(r1.best.params.values[i].v == r2.best.params.values[i].v);
}

TEST_CASE("training reduces loss on a learnable task") {
  Fixture f = make_fixture(Architecture::SA, 60);
  TrainConfig cfg = quick_config();
  cfg.max_epochs = 25;
  cfg.learning_rate = 5e-3;
  TrainResult r = train(Model(f.spec, f.enc, 1), f.samples, cfg);
  REQUIRE(r.log.size() >= 2);
  REQUIRE(r.log.back().train_loss < r.log.front().train_loss);
  REQUIRE_FALSE(r.diverged);
}

TEST_CASE("one epoch of training changes the checkpoint") {
  Fixture f = make_fixture(Architecture::SA, 24);
  Model init(f.spec, f.enc, 1);
  TrainConfig cfg = quick_config();
  cfg.max_epochs = 1;
  cfg.patience = 1;
  TrainResult r = train(init, f.samples, cfg);
  bool changed = false;
  for (std::size_t i = 0; i < init.params.size(); ++i)
    changed = changed || r.best.params.values[i].v != init.params.values[i].v;
  // best checkpoint only replaces init if validation improved; train loss
  // must have moved parameters in either case
  REQUIRE((changed || r.best_val_loss <= r.log.front().val_loss));
}

TEST_CASE("evaluate on a perfectly calibrated model: R^2 1, p = 1") {
  // bypass training: compare identical prediction/target vectors directly
  std::vector<double> y;
  Rng rng(8);
  for (int i = 0; i < 60; ++i) y.push_back(rng.normal());
  FitMetrics m = fit_metrics(y, y);
  auto ts = permutation_test(y, y, 99, 1);
  REQUIRE(m.r2 == 1.0);
  REQUIRE(ts.p_value == 1.0);
}

TEST_CASE("evaluate is deterministic on a fixed checkpoint") {
  Fixture f = make_fixture(Architecture::SHORING, 24);
  Model m(f.spec, f.enc, 2);
  FitReport a = evaluate(m, f.samples, LossKind::Mse, 99, 5);
  FitReport b = evaluate(m, f.samples, LossKind::Mse, 99, 5);
  REQUIRE(a.metrics.r2 == b.metrics.r2);
  REQUIRE(a.two_sample.p_value == b.two_sample.p_value);
}

TEST_CASE("classification path: AUC and recall at high precision") {
  // separable scores
  std::vector<double> scores = {0.9, 0.8, 0.7, 0.2, 0.1};
  std::vector<int> labels = {1, 1, 1, 0, 0};
  REQUIRE(auc_score(scores, labels) == 1.0);
  REQUIRE(recall_at_precision(scores, labels, 0.99) == 1.0);
  // random scores give AUC near 0.5
  Rng rng(3);
  std::vector<double> s2;
  std::vector<int> l2;
  for (int i = 0; i < 2000; ++i) {
    s2.push_back(rng.uniform());
    l2.push_back(rng.uniform() < 0.5 ? 1 : 0);
  }
  REQUIRE(auc_score(s2, l2) == Catch::Approx(0.5).margin(0.05));
}

TEST_CASE("grid search ranks by validation loss and is deterministic") {
  Fixture f = make_fixture(Architecture::SA, 24);
  TrainConfig a = quick_config(), b = quick_config();
  a.max_epochs = b.max_epochs = 2;
  b.learning_rate = 1e-6;
  auto board1 = grid_search(f.spec, f.enc, f.samples, {a, b}, 2, 1);
  auto board2 = grid_search(f.spec, f.enc, f.samples, {a, b}, 2, 1);
  REQUIRE(board1.size() == 2);
  REQUIRE(board1[0].val_loss <= board1[1].val_loss);
  REQUIRE(board1[0].val_loss == board2[0].val_loss);
  REQUIRE_THROWS_AS(grid_search(f.spec, f.enc, f.samples, {}, 1, 1), std::invalid_argument);
  REQUIRE_THROWS_AS(grid_search(f.spec, f.enc, f.samples, {a}, 0, 1), std::invalid_argument);
}
