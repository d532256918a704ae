#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "shoring/autodiff.hpp"
#include "shoring/encode.hpp"
#include "shoring/eventnet.hpp"
#include "shoring/init.hpp"
#include "shoring/seqnet.hpp"

namespace shoring {

enum class Architecture { SA, SSA, SHORIN, SHORING };

inline const char* to_string(Architecture a) {
  switch (a) {
    case Architecture::SA: return "SA";
    case Architecture::SSA: return "SSA";
    case Architecture::SHORIN: return "SHORIN";
    case Architecture::SHORING: return "SHORING";
  }
  return "?";
}

inline Architecture architecture_from_string(const std::string& s) {
  if (s == "SA") return Architecture::SA;
  if (s == "SSA") return Architecture::SSA;
  if (s == "SHORIN") return Architecture::SHORIN;
  if (s == "SHORING") return Architecture::SHORING;
  throw std::invalid_argument("unknown architecture '" + s + "'");
}

struct ModelSpec {
  Architecture arch = Architecture::SHORING;
  int m = 1;          // sequences per sample (parameters not shared across them)
  int k = 16;         // event embedding width
  int n_terms = 12;   // N: interaction terms in the event network (o = 3..N high-order)
  int d_s = 16;       // attention projection width
  int heads = 2;      // H
  int hidden = 128;   // task head hidden width (three-layer perceptron)
  int d_emb = 16;     // categorical embedding width
  int out_dim = 1;    // 1 = regression, >1 = classification logits
  Pooling pooling = Pooling::Mean;
  std::vector<int> tracked_fields =
      std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7, 8};  // assignment-matrix fields
  double eps = 1e-7;

  bool uses_event_net() const {
    return arch == Architecture::SHORIN || arch == Architecture::SHORING;
  }
  bool uses_cond() const { return arch == Architecture::SHORING; }
  int d_e() const { return kDenseWidth + d_emb; }
  int seq_width() const { return uses_cond() ? k + d_s : d_s; }
  int head_in() const { return m * seq_width(); }
};

inline nlohmann::json to_json(const ModelSpec& s) {
  return nlohmann::json{{"model", to_string(s.arch)}, {"m", s.m},     {"k", s.k},
                        {"n_terms", s.n_terms},       {"d_s", s.d_s}, {"heads", s.heads},
                        {"hidden", s.hidden},         {"d_emb", s.d_emb},
                        {"out_dim", s.out_dim},
                        {"pooling", s.pooling == Pooling::Mean ? "mean" : "sum"},
                        {"tracked_fields", s.tracked_fields}};
}

inline ModelSpec model_spec_from_json(const nlohmann::json& j) {
  ModelSpec s;
  s.arch = architecture_from_string(j.at("model").get<std::string>());
  s.m = j.value("m", s.m);
  s.k = j.value("k", s.k);
  s.n_terms = j.value("n_terms", s.n_terms);
  s.d_s = j.value("d_s", s.d_s);
  s.heads = j.value("heads", s.heads);
  s.hidden = j.value("hidden", s.hidden);
  s.d_emb = j.value("d_emb", s.d_emb);
  s.out_dim = j.value("out_dim", s.out_dim);
  s.pooling = j.value("pooling", std::string("mean")) == "sum" ? Pooling::Sum : Pooling::Mean;
  s.tracked_fields = j.value("tracked_fields", s.tracked_fields);
  return s;
}

// Named parameter tensors in a fixed order (checkpointing, Adam state and
// gradient accumulation all iterate in this order).
struct ParamSet {
  std::vector<std::string> names;
  std::vector<Tensor> values;
  std::map<std::string, int> by_name;

  int add(const std::string& name, Tensor t) {
    if (by_name.count(name)) throw std::invalid_argument("duplicate parameter " + name);
    by_name[name] = int(names.size());
    names.push_back(name);
    values.push_back(std::move(t));
    return int(names.size()) - 1;
  }
  int index(const std::string& name) const {
    auto it = by_name.find(name);
    if (it == by_name.end()) throw std::invalid_argument("unknown parameter " + name);
    return it->second;
  }
  std::size_t size() const { return names.size(); }
};

struct EncodedSample {
  std::vector<EncodedSequence> seqs;
  std::vector<AssignmentMatrix> assigns;  // aligned with seqs when cond branch is on
  double target = 0.0;                    // standardized regression target or class index
};

class Model {
 public:
  ModelSpec spec;
  ParamSet params;

  Model() = default;

  // Orthogonal init for every weight matrix; zeros for biases (1-D shapes)
  // except the positive transform's, which starts at 1 so x_tilde begins in
  // the relu's linear regime instead of at the eps floor (ln eps ~ -16 would
  // blow up the exp of the high-order embedding at initialization);
  // N(0, 0.1^2) for exponent matrices and embedding tables, which small
  // values keep early monomials near 1.
  Model(const ModelSpec& ms, const EncoderSpec& enc, std::uint64_t seed) : spec(ms) {
    std::uint64_t pi = 0;
    auto next_seed = [&] { return Rng::derive(seed, pi++).next_u64(); };
    auto ortho = [&](const std::string& n, std::size_t r, std::size_t c) {
      params.add(n, orthogonal_init(r, c, next_seed()));
    };
    auto zeros = [&](const std::string& n, std::size_t len) {
      next_seed();
      params.add(n, Tensor::zeros({len}));
    };
    auto gauss = [&](const std::string& n, std::size_t r, std::size_t c, double sigma) {
      params.add(n, gaussian_init({r, c}, sigma, next_seed()));
    };
    auto constant = [&](const std::string& n, std::size_t len, double v) {
      next_seed();
      Tensor c = Tensor::zeros({len});
      for (auto& e : c.v) e = v;
      params.add(n, std::move(c));
    };

    std::size_t k = std::size_t(spec.k), de = std::size_t(spec.d_e());
    std::size_t ds = std::size_t(spec.d_s);
    for (int s = 0; s < spec.m; ++s) {
      std::string p = "seq" + std::to_string(s) + ".";
      for (int f = 0; f < kNumCatFields; ++f)
        gauss(p + "embed" + std::to_string(f),
              std::size_t(enc.cat_fields[std::size_t(f)].table_size), std::size_t(spec.d_emb),
              0.1);
      if (spec.uses_event_net()) {
        ortho(p + "ev.w_x", de, de);
        constant(p + "ev.b_x", de, 1.0);
        ortho(p + "ev.w1", k, de);
        ortho(p + "ev.w2", k, de);
        if (spec.n_terms > 2) gauss(p + "ev.u", std::size_t(spec.n_terms - 2) * k, de, 0.1);
        ortho(p + "ev.w_e", k, k);
        zeros(p + "ev.b_e", k);
      } else {
        ortho(p + "enc.w", k, de);
        zeros(p + "enc.b", k);
      }
      for (int h = 0; h < spec.heads; ++h) {
        std::string hp = p + "attn1.h" + std::to_string(h) + ".";
        ortho(hp + "wq", ds, k);
        ortho(hp + "wk", ds, k);
        ortho(hp + "wv", ds, k);
      }
      if (spec.arch == Architecture::SSA) {
        for (int h = 0; h < spec.heads; ++h) {
          std::string hp = p + "attn2.h" + std::to_string(h) + ".";
          ortho(hp + "wq", ds, ds);
          ortho(hp + "wk", ds, ds);
          ortho(hp + "wv", ds, ds);
        }
      }
      if (spec.uses_cond()) {
        std::size_t nf = tracked_row_count(enc).first;
        ortho(p + "cond.w_p", k, k);
        zeros(p + "cond.b_p", k);
        ortho(p + "cond.w_f", k, k);
        zeros(p + "cond.b_f", k);
        ortho(p + "cond.w_z", k, nf * k);
        zeros(p + "cond.b_z", k);
      }
    }
    ortho("head.w1", std::size_t(spec.hidden), std::size_t(spec.head_in()));
    zeros("head.b1", std::size_t(spec.hidden));
    ortho("head.w2", std::size_t(spec.hidden), std::size_t(spec.hidden));
    zeros("head.b2", std::size_t(spec.hidden));
    ortho("head.w3", std::size_t(spec.out_dim), std::size_t(spec.hidden));
    zeros("head.b3", std::size_t(spec.out_dim));
  }

  std::pair<std::size_t, std::size_t> tracked_row_count(const EncoderSpec& enc) const {
    std::size_t nf = spec.tracked_fields.size(), dp = 0;
    for (int f : spec.tracked_fields)
      dp += std::size_t(enc.cat_fields[std::size_t(f)].table_size - 1);
    return {nf, dp};
  }

  // Leaves for every parameter on a fresh tape, in ParamSet order.
  std::vector<Var> make_leaves(Tape& t, bool requires_grad) const {
    std::vector<Var> vars;
    vars.reserve(params.size());
    for (const auto& v : params.values) vars.push_back(t.leaf(v, requires_grad));
    return vars;
  }

  // Model output for one sample: (out_dim x 1).
  Var predict(Tape& t, const std::vector<Var>& vars, const EncodedSample& sample) const {
    auto at = [&](const std::string& n) { return vars[std::size_t(params.index(n))]; };
    std::vector<Var> seq_embs;
    for (int s = 0; s < spec.m; ++s) {
      std::string p = "seq" + std::to_string(s) + ".";
      const EncodedSequence& es = sample.seqs[std::size_t(s)];

      // event features: dense block stacked on summed categorical embeddings
      Var emb;
      for (int f = 0; f < kNumCatFields; ++f) {
        Var e = embed_cols(t, at(p + "embed" + std::to_string(f)), es.cat_idx[std::size_t(f)]);
        emb = emb.valid() ? add(t, emb, e) : e;
      }
      Var x = concat_rows(t, {t.constant(es.dense), emb});

      Var c;
      if (spec.uses_event_net()) {
        EventNetVars ev;
        ev.w_x = at(p + "ev.w_x");
        ev.b_x = at(p + "ev.b_x");
        ev.w1 = at(p + "ev.w1");
        ev.w2 = at(p + "ev.w2");
        ev.n_high_order = spec.n_terms > 2 ? std::size_t(spec.n_terms - 2) : 0;
        if (ev.n_high_order > 0) ev.u = at(p + "ev.u");
        ev.w_e = at(p + "ev.w_e");
        ev.b_e = at(p + "ev.b_e");
        ev.eps = spec.eps;
        c = event_forward(t, ev, x);
      } else {
        c = dense_relu(t, at(p + "enc.w"), x, at(p + "enc.b"));
      }

      auto heads_of = [&](const std::string& layer) {
        std::vector<AttentionHeadVars> hs;
        for (int h = 0; h < spec.heads; ++h) {
          std::string hp = p + layer + ".h" + std::to_string(h) + ".";
          hs.push_back({at(hp + "wq"), at(hp + "wk"), at(hp + "wv")});
        }
        return hs;
      };

      Var emb_s;
      switch (spec.arch) {
        case Architecture::SA:
          emb_s = self_attention(t, c, es.mask, heads_of("attn1"), spec.pooling);
          break;
        case Architecture::SSA:
          emb_s = stacked_self_attention(t, c, es.mask, heads_of("attn1"), heads_of("attn2"),
                                         spec.pooling);
          break;
        case Architecture::SHORIN:
          emb_s = hybrid_forward(t, c, es.mask, AssignmentMatrix{}, CondVars{}, false,
                                 heads_of("attn1"), spec.pooling);
          break;
        case Architecture::SHORING: {
          CondVars cv{at(p + "cond.w_p"), at(p + "cond.b_p"), at(p + "cond.w_f"),
                      at(p + "cond.b_f"), at(p + "cond.w_z"), at(p + "cond.b_z")};
          emb_s = hybrid_forward(t, c, es.mask, sample.assigns[std::size_t(s)], cv, true,
                                 heads_of("attn1"), spec.pooling);
          break;
        }
      }
      seq_embs.push_back(emb_s);
    }
    Var f = seq_embs.size() == 1 ? seq_embs[0] : concat_rows(t, seq_embs);
    Var h1 = dense_relu(t, at("head.w1"), f, at("head.b1"));
    Var h2 = dense_relu(t, at("head.w2"), h1, at("head.b2"));
    return affine(t, at("head.w3"), h2, at("head.b3"));
  }
};

// Encodes and pads a dataset for a model at a fixed window length tau.
inline std::vector<EncodedSample> encode_dataset(const Dataset& ds, const EncoderSpec& enc,
                                                 const ModelSpec& spec, std::size_t tau,
                                                 const std::vector<double>& targets) {
  std::vector<EncodedSample> out;
  out.reserve(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    EncodedSample s;
    s.target = targets.empty() ? ds[i].label : targets[i];
    for (const auto& seq : ds[i].sequences) {
      auto [padded, mask] = pad_and_mask(seq, tau);
      EncodedSequence es = encode_sequence(padded, mask, enc);
      if (spec.uses_cond()) s.assigns.push_back(build_assignment(es, enc, spec.tracked_fields));
      s.seqs.push_back(std::move(es));
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace shoring
