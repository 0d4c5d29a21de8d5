#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dela/rng.hpp"
#include "dela/tensor.hpp"
#include "dela/tokenizer.hpp"
#include "dela/types.hpp"

namespace dela::model {

using tensor::BatchNormState;
using tensor::Mat;
using tensor::Tape;

struct BackboneConfig {
  int nu = 6;        // per-block padding width; token dim is 2*k*nu
  int k = 8;         // neighborhood size (self + k-1 neighbors)
  int heads = 4;
  int d_model = 192;
  int depth = 6;
  int n_feat = 24;
  int stride = 1;
  double dropout = 0.1;

  int token_dim() const { return 2 * k * nu; }
  int head_hidden() const { return 4 * n_feat; }

  void validate() const {
    if (nu < 1 || k < 1 || heads < 1 || d_model < 1 || depth < 1 || n_feat < 1 ||
        stride < 1)
      throw std::invalid_argument("BackboneConfig: all sizes must be positive");
    if (d_model % heads != 0)
      throw std::invalid_argument("BackboneConfig: d_model must divide by heads");
    if (dropout < 0 || dropout >= 1)
      throw std::invalid_argument("BackboneConfig: dropout in [0,1)");
  }
};

inline BackboneConfig medium_config() { return BackboneConfig{}; }

inline BackboneConfig large_config() {
  BackboneConfig c;
  c.nu = 12;
  c.k = 16;
  c.heads = 8;
  c.d_model = 384;
  c.depth = 6;
  c.n_feat = 48;
  c.stride = 2;
  return c;
}

inline BackboneConfig tiny_config() {
  BackboneConfig c;
  c.nu = 4;
  c.k = 4;
  c.heads = 4;
  c.d_model = 32;
  c.depth = 3;
  c.n_feat = 8;
  c.stride = 1;
  return c;
}

inline BackboneConfig config_by_name(const std::string& name) {
  if (name == "medium") return medium_config();
  if (name == "large") return large_config();
  if (name == "tiny") return tiny_config();
  throw std::invalid_argument("unknown model size: " + name);
}

template <class S>
struct LayerNormP {
  Mat<S> gain;  // 1 x c
  Mat<S> bias;  // 1 x c
};

template <class S>
struct BlockP {
  LayerNormP<S> ln1;
  Mat<S> wq, wk, wv, wo;  // d_model x d_model, no bias
  LayerNormP<S> ln2;
  Mat<S> ff1;  // d_model x 4*d_model (GLU halves to 2*d_model)
  Mat<S> ff2;  // 2*d_model x d_model
};

template <class S>
struct BackboneParams {
  Mat<S> embed_w;  // token_dim x 2*d_model (GLU halves to d_model)
  Mat<S> embed_b;  // 1 x 2*d_model
  std::vector<BlockP<S>> blocks;
  LayerNormP<S> ln_final;
  Mat<S> extractor;  // d_model x 2*n_feat (GLU halves to n_feat)
};

template <class S>
struct HeadParams {
  Mat<S> w1;  // n_feat x 2h
  Mat<S> w2;  // h x 2h
  Mat<S> w3;  // h x 8*n_feat
  BatchNormState<S> bn;
};

template <class S>
struct ModelParams {
  BackboneParams<S> backbone;
  HeadParams<S> head;
};

// ------------------------------------------------------------------ visitors

template <class S, class Fn>
void for_each_param(BackboneParams<S>& p, Fn&& fn) {
  fn("embed_w", p.embed_w);
  fn("embed_b", p.embed_b);
  for (std::size_t i = 0; i < p.blocks.size(); ++i) {
    auto& b = p.blocks[i];
    std::string pre = "block" + std::to_string(i) + ".";
    fn(pre + "ln1.gain", b.ln1.gain);
    fn(pre + "ln1.bias", b.ln1.bias);
    fn(pre + "wq", b.wq);
    fn(pre + "wk", b.wk);
    fn(pre + "wv", b.wv);
    fn(pre + "wo", b.wo);
    fn(pre + "ln2.gain", b.ln2.gain);
    fn(pre + "ln2.bias", b.ln2.bias);
    fn(pre + "ff1", b.ff1);
    fn(pre + "ff2", b.ff2);
  }
  fn("ln_final.gain", p.ln_final.gain);
  fn("ln_final.bias", p.ln_final.bias);
  fn("extractor", p.extractor);
}

template <class S, class Fn>
void for_each_param(HeadParams<S>& p, Fn&& fn) {
  fn("head.w1", p.w1);
  fn("head.w2", p.w2);
  fn("head.w3", p.w3);
}

template <class S, class Fn>
void for_each_param(ModelParams<S>& p, Fn&& fn) {
  for_each_param(p.backbone, fn);
  for_each_param(p.head, fn);
}

// Non-trainable tensors (batch-norm running statistics).
template <class S, class Fn>
void for_each_state(ModelParams<S>& p, Fn&& fn) {
  fn("head.bn.running_mean", p.head.bn.running_mean);
  fn("head.bn.running_var", p.head.bn.running_var);
}

// ---------------------------------------------------------------------- init

template <class S>
Mat<S> glorot(int in, int out, Rng& rng) {
  double a = std::sqrt(6.0 / (in + out));
  Mat<S> w(in, out);
  for (int i = 0; i < in; ++i)
    for (int j = 0; j < out; ++j) w(i, j) = static_cast<S>(rng.uniform(-a, a));
  return w;
}

template <class S>
LayerNormP<S> init_layer_norm(int c) {
  return {Mat<S>::Ones(1, c), Mat<S>::Zero(1, c)};
}

template <class S>
BackboneParams<S> init_backbone(const BackboneConfig& cfg, Rng& rng) {
  cfg.validate();
  BackboneParams<S> p;
  const int dm = cfg.d_model;
  p.embed_w = glorot<S>(cfg.token_dim(), 2 * dm, rng);
  p.embed_b = Mat<S>::Zero(1, 2 * dm);
  p.blocks.resize(cfg.depth);
  for (auto& b : p.blocks) {
    b.ln1 = init_layer_norm<S>(dm);
    b.wq = glorot<S>(dm, dm, rng);
    b.wk = glorot<S>(dm, dm, rng);
    b.wv = glorot<S>(dm, dm, rng);
    b.wo = glorot<S>(dm, dm, rng);
    b.ln2 = init_layer_norm<S>(dm);
    b.ff1 = glorot<S>(dm, 4 * dm, rng);
    b.ff2 = glorot<S>(2 * dm, dm, rng);
  }
  p.ln_final = init_layer_norm<S>(dm);
  p.extractor = glorot<S>(dm, 2 * cfg.n_feat, rng);
  return p;
}

template <class S>
HeadParams<S> init_head(const BackboneConfig& cfg, Rng& rng) {
  HeadParams<S> p;
  const int h = cfg.head_hidden();
  p.w1 = glorot<S>(cfg.n_feat, 2 * h, rng);
  p.w2 = glorot<S>(h, 2 * h, rng);
  p.w3 = glorot<S>(h, 8 * cfg.n_feat, rng);
  p.bn.ensure(8 * cfg.n_feat);
  return p;
}

template <class S>
ModelParams<S> init_model(const BackboneConfig& cfg, Rng& rng) {
  return {init_backbone<S>(cfg, rng), init_head<S>(cfg, rng)};
}

// ------------------------------------------------------------- param counts

inline std::int64_t backbone_param_count(const BackboneConfig& cfg) {
  const std::int64_t dm = cfg.d_model;
  std::int64_t embed = std::int64_t(cfg.token_dim()) * 2 * dm + 2 * dm;
  std::int64_t block = 2 * (2 * dm)        // two layer norms
                       + 4 * dm * dm       // attention projections
                       + dm * 4 * dm       // feed-forward in
                       + 2 * dm * dm;      // feed-forward out
  std::int64_t final_ln = 2 * dm;
  std::int64_t extractor = dm * 2 * cfg.n_feat;
  return embed + cfg.depth * block + final_ln + extractor;
}

inline std::int64_t head_param_count(const BackboneConfig& cfg) {
  const std::int64_t nf = cfg.n_feat, h = cfg.head_hidden();
  return nf * 2 * h + h * 2 * h + h * 8 * nf;
}

/// Backbone + student head + teacher head + teacher extractor; the frozen
/// teacher trunk mirrors the student and is not counted twice.
inline std::int64_t total_param_count(const BackboneConfig& cfg) {
  return backbone_param_count(cfg) + 2 * head_param_count(cfg) +
         std::int64_t(cfg.d_model) * 2 * cfg.n_feat;
}

template <class S>
std::int64_t actual_param_count(ModelParams<S>& p) {
  std::int64_t n = 0;
  for_each_param(p, [&](const std::string&, Mat<S>& m) { n += m.size(); });
  return n;
}

// ------------------------------------------------------------------ forward

/// Parameter tensors registered as leaves on a tape for one forward pass.
template <class S>
struct TapedBackbone {
  int embed_w, embed_b;
  struct Block {
    int ln1_g, ln1_b, wq, wk, wv, wo, ln2_g, ln2_b, ff1, ff2;
  };
  std::vector<Block> blocks;
  int lnf_g, lnf_b, extractor;
};

template <class S>
struct TapedHead {
  int w1, w2, w3;
};

template <class S>
TapedBackbone<S> push_backbone(Tape<S>& t, const BackboneParams<S>& p, bool rg) {
  TapedBackbone<S> ids;
  ids.embed_w = t.push_leaf(p.embed_w, rg);
  ids.embed_b = t.push_leaf(p.embed_b, rg);
  for (const auto& b : p.blocks)
    ids.blocks.push_back({t.push_leaf(b.ln1.gain, rg), t.push_leaf(b.ln1.bias, rg),
                          t.push_leaf(b.wq, rg), t.push_leaf(b.wk, rg),
                          t.push_leaf(b.wv, rg), t.push_leaf(b.wo, rg),
                          t.push_leaf(b.ln2.gain, rg), t.push_leaf(b.ln2.bias, rg),
                          t.push_leaf(b.ff1, rg), t.push_leaf(b.ff2, rg)});
  ids.lnf_g = t.push_leaf(p.ln_final.gain, rg);
  ids.lnf_b = t.push_leaf(p.ln_final.bias, rg);
  ids.extractor = t.push_leaf(p.extractor, rg);
  return ids;
}

template <class S>
TapedHead<S> push_head(Tape<S>& t, const HeadParams<S>& p, bool rg) {
  return {t.push_leaf(p.w1, rg), t.push_leaf(p.w2, rg), t.push_leaf(p.w3, rg)};
}

template <class S>
int multi_head_attention(Tape<S>& t, int x, const typename TapedBackbone<S>::Block& b,
                         int heads) {
  const int dm = static_cast<int>(t.value(x).cols());
  const int dh = dm / heads;
  int q = t.matmul(x, b.wq);
  int k = t.matmul(x, b.wk);
  int v = t.matmul(x, b.wv);
  const S tau = static_cast<S>(std::sqrt(static_cast<double>(dh)));
  int out = -1;
  for (int h = 0; h < heads; ++h) {
    int qh = t.slice_cols(q, h * dh, dh);
    int kh = t.slice_cols(k, h * dh, dh);
    int vh = t.slice_cols(v, h * dh, dh);
    int att = t.softmax_rows(t.matmul_nt(qh, kh), tau);
    int oh = t.matmul(att, vh);
    out = h == 0 ? oh : t.concat_cols(out, oh);
  }
  return t.matmul(out, b.wo);
}

/// Tokens (n_t x token_dim) -> features node (1 x n_feat), values in [-1, 1].
template <class S>
int backbone_forward(Tape<S>& t, const TapedBackbone<S>& p, int tokens,
                     const BackboneConfig& cfg, bool train, Rng* rng) {
  int x = t.glu(t.add_rowvec(t.matmul(tokens, p.embed_w), p.embed_b));
  for (const auto& b : p.blocks) {
    int n1 = t.layer_norm(x, b.ln1_g, b.ln1_b);
    x = t.add(x, multi_head_attention(t, n1, b, cfg.heads));
    int n2 = t.layer_norm(x, b.ln2_g, b.ln2_b);
    int ff = t.matmul(t.glu(t.matmul(n2, b.ff1)), b.ff2);
    ff = t.dropout(ff, cfg.dropout, train, rng);
    x = t.add(x, ff);
  }
  x = t.layer_norm(x, p.lnf_g, p.lnf_b);
  x = t.glu(t.matmul(x, p.extractor));
  return t.tanh_(t.row_mean_pool(x));
}

/// Features (j x n_feat) -> projections (j x 8*n_feat), batch-normalized.
template <class S>
int head_forward(Tape<S>& t, const TapedHead<S>& p, int features,
                 BatchNormState<S>& bn, double dropout, bool train, Rng* rng) {
  int x = t.dropout(t.glu(t.matmul(features, p.w1)), dropout, train, rng);
  x = t.dropout(t.glu(t.matmul(x, p.w2)), dropout, train, rng);
  x = t.matmul(x, p.w3);
  return t.batch_norm(x, bn, train);
}

// -------------------------------------------------------------- ema / infer

/// teacher <- (1 - mu) * teacher + mu * student, including running stats.
template <class S>
void ema_update(ModelParams<S>& teacher, ModelParams<S>& student, double mu) {
  const S m = static_cast<S>(mu);
  std::vector<Mat<S>*> sp, tp;
  for_each_param(student, [&](const std::string&, Mat<S>& v) { sp.push_back(&v); });
  for_each_param(teacher, [&](const std::string&, Mat<S>& v) { tp.push_back(&v); });
  for (std::size_t i = 0; i < sp.size(); ++i)
    *tp[i] = (S(1) - m) * (*tp[i]) + m * (*sp[i]);
  sp.clear();
  tp.clear();
  for_each_state(student, [&](const std::string&, Mat<S>& v) { sp.push_back(&v); });
  for_each_state(teacher, [&](const std::string&, Mat<S>& v) { tp.push_back(&v); });
  for (std::size_t i = 0; i < sp.size(); ++i)
    *tp[i] = (S(1) - m) * (*tp[i]) + m * (*sp[i]);
}

/// Inference: tokenized sample through the backbone, no dropout, no grads.
template <class S>
Vector forward_features(const BackboneParams<S>& params, const BackboneConfig& cfg,
                        const tokenizer::TokenSet& tokens) {
  Tape<S> t;
  int tok = t.push_leaf(tokens.tokens.template cast<S>(), false);
  TapedBackbone<S> p = push_backbone(t, params, false);
  int out = backbone_forward(t, p, tok, cfg, false, nullptr);
  return t.value(out).row(0).template cast<double>();
}

}  // namespace dela::model
