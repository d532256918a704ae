#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "shoring/autodiff.hpp"
#include "shoring/encode.hpp"

namespace shoring {

enum class Pooling { Mean, Sum };

struct AttentionHeadVars {
  Var wq, wk, wv;  // d_s x k each
};

// Pool a (d x tau) per-position matrix over valid positions. All-invalid mask
// yields the zero vector.
inline Var pool_valid(Tape& t, Var positions, const std::vector<double>& mask, Pooling mode) {
  double nv = 0.0;
  for (double m : mask) nv += m != 0.0 ? 1.0 : 0.0;
  Var mcol = t.constant(Tensor({mask.size(), 1}, mask));
  Var s = matmul(t, positions, mcol);  // d x 1
  if (mode == Pooling::Mean && nv > 0.0) s = scale(t, s, 1.0 / nv);
  return s;
}

// Masked softmax self-attention, per-position outputs (d_s x tau):
// scores = (wq c)^T (wk c) / sqrt(d_s), invalid key columns masked, rows
// softmaxed, applied to (wv c)^T.
inline Var attention_positions(Tape& t, Var c, const std::vector<double>& mask,
                               const AttentionHeadVars& h) {
  const Tensor& wq = t.value(h.wq);
  double inv_sqrt_ds = 1.0 / std::sqrt(double(wq.rows()));
  Var q = matmul(t, h.wq, c);
  Var k = matmul(t, h.wk, c);
  Var v = matmul(t, h.wv, c);
  Var scores = scale(t, matmul(t, transpose(t, q), k), inv_sqrt_ds);  // tau x tau
  Var weights = masked_softmax(t, scores, mask);
  return transpose(t, matmul(t, weights, transpose(t, v)));  // d_s x tau
}

// Single-layer attention sequence embedding: heads averaged, pooled over
// valid positions.
inline Var self_attention(Tape& t, Var c, const std::vector<double>& mask,
                          const std::vector<AttentionHeadVars>& heads, Pooling pooling) {
  if (heads.empty()) throw std::invalid_argument("self_attention: need at least one head");
  Var acc;
  for (const auto& h : heads) {
    Var pooled = pool_valid(t, attention_positions(t, c, mask, h), mask, pooling);
    acc = acc.valid() ? add(t, acc, pooled) : pooled;
  }
  return scale(t, acc, 1.0 / double(heads.size()));
}

// Two-layer stacked variant: layer 1 runs without pooling (per-position
// outputs, heads averaged), layer 2 attends over those positions with the
// same mask and pools.
inline Var stacked_self_attention(Tape& t, Var c, const std::vector<double>& mask,
                                  const std::vector<AttentionHeadVars>& layer1,
                                  const std::vector<AttentionHeadVars>& layer2,
                                  Pooling pooling) {
  if (layer1.empty() || layer2.empty())
    throw std::invalid_argument("stacked_self_attention: need at least one head per layer");
  Var acc;
  for (const auto& h : layer1) {
    Var pos = attention_positions(t, c, mask, h);
    acc = acc.valid() ? add(t, acc, pos) : pos;
  }
  Var mid = scale(t, acc, 1.0 / double(layer1.size()));
  return self_attention(t, mid, mask, layer2, pooling);
}

// Binary entity-by-position assignment matrix in sparse per-position form.
// Entity rows are field-major: field f's rows cover [field_offsets[f],
// field_offsets[f+1]), one row per non-padding dense index (lowfreq first).
struct AssignmentMatrix {
  std::vector<std::vector<int>> groups;  // per position: entity rows present
  std::vector<int> field_offsets;        // size n_fields + 1
  int d_p = 0;

  int n_fields() const { return int(field_offsets.size()) - 1; }
};

// p_{ij} = 1 iff event j contains entity i. Exactly one entity per (tracked
// field, valid position); padded positions get all-zero columns. Values
// outside the fitted vocabulary already map to the field's lowfreq row via
// the encoder's dense indices.
inline AssignmentMatrix build_assignment(const EncodedSequence& seq, const EncoderSpec& spec,
                                         const std::vector<int>& tracked_fields) {
  if (tracked_fields.empty())
    throw std::invalid_argument("build_assignment: empty field set");
  AssignmentMatrix am;
  am.field_offsets.push_back(0);
  for (int f : tracked_fields) {
    if (f < 0 || f >= int(spec.cat_fields.size()))
      throw std::invalid_argument("build_assignment: tracked field out of range");
    // rows per field: table_size - 1 (every dense index except padding)
    am.field_offsets.push_back(am.field_offsets.back() +
                               spec.cat_fields[std::size_t(f)].table_size - 1);
  }
  am.d_p = am.field_offsets.back();
  std::size_t tau = seq.mask.size();
  am.groups.resize(tau);
  for (std::size_t j = 0; j < tau; ++j) {
    if (seq.mask[j] == 0.0) continue;
    for (std::size_t fi = 0; fi < tracked_fields.size(); ++fi) {
      int dense = seq.cat_idx[std::size_t(tracked_fields[fi])][j];
      if (dense == kPadIndex) continue;
      am.groups[j].push_back(am.field_offsets[fi] + dense - 1);
    }
  }
  return am;
}

// Dense form of the assignment matrix (d_p x tau), for cross-checking the
// sparse scatter-add against a plain matrix product.
inline Tensor assignment_dense(const AssignmentMatrix& am) {
  Tensor p({std::size_t(am.d_p), am.groups.size()});
  for (std::size_t j = 0; j < am.groups.size(); ++j)
    for (int e : am.groups[j]) p.at(std::size_t(e), j) = 1.0;
  return p;
}

struct CondVars {
  Var w_p, b_p;  // entity-level, k_p x k and k_p
  Var w_f, b_f;  // field-level, k_f x k_p and k_f
  Var w_z, b_z;  // output, z_w x (n_fields * k_f) and z_w
};

// Conditional sequence network:
//   e^(e) = sigma(p c^T)          per-entity sums of event embeddings
//   e^(f) = sigma(sum of the field's entity rows)
//   z     = sigma(concatenated field embeddings)
// The group-by sum is order-free, so z is invariant under permutation of
// valid events.
inline Var conditional_forward(Tape& t, Var c, const AssignmentMatrix& am, const CondVars& p) {
  if (am.n_fields() < 1) throw std::invalid_argument("conditional_forward: empty field partition");
  Var pc = scatter_groups(t, c, am.groups, std::size_t(am.d_p));                 // d_p x k
  Var ee = relu(t, add_rowvec(t, matmul(t, pc, transpose(t, p.w_p)), p.b_p));    // d_p x k_p

  // constant field-sum matrix (n_fields x d_p)
  Tensor fsum({std::size_t(am.n_fields()), std::size_t(am.d_p)});
  for (int f = 0; f < am.n_fields(); ++f)
    for (int r = am.field_offsets[std::size_t(f)]; r < am.field_offsets[std::size_t(f) + 1]; ++r)
      fsum.at(std::size_t(f), std::size_t(r)) = 1.0;
  Var sums = matmul(t, t.constant(std::move(fsum)), ee);                         // n_fields x k_p
  Var ef = relu(t, add_rowvec(t, matmul(t, sums, transpose(t, p.w_f)), p.b_f));  // n_fields x k_f

  const Tensor& ef_v = t.value(ef);
  Var flat = reshape(t, ef, {ef_v.numel(), 1});
  return dense_relu(t, p.w_z, flat, p.b_z);  // z_w x 1
}

// Hybrid sequence representation (one sequence): [conditional branch z,
// head-averaged attention]. The conditional branch output already carries its
// nonlinearity, so it is concatenated directly. Pass an invalid cond w_z to
// disable the branch (the SHORIN ablation).
inline Var hybrid_forward(Tape& t, Var c, const std::vector<double>& mask,
                          const AssignmentMatrix& am, const CondVars& cond, bool use_cond,
                          const std::vector<AttentionHeadVars>& heads, Pooling pooling) {
  Var attn = self_attention(t, c, mask, heads, pooling);
  if (!use_cond) return attn;
  Var z = conditional_forward(t, c, am, cond);
  return concat_rows(t, {z, attn});
}

}  // namespace shoring
