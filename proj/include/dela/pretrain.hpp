#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dela/checkpoint.hpp"
#include "dela/linalg.hpp"
#include "dela/model.hpp"
#include "dela/randgen.hpp"
#include "dela/rng.hpp"
#include "dela/sampling.hpp"
#include "dela/tokenizer.hpp"
#include "dela/types.hpp"

namespace dela::pretrain {

using model::BackboneConfig;
using model::BackboneParams;
using model::HeadParams;
using randgen::ProblemInstance;
using tensor::Mat;
using tensor::Tape;

struct AugmentationSpec {
  bool rotate = true;
  bool invert = true;
  bool permute_columns = true;
  bool independent_resample = true;

  bool any() const { return rotate || invert || permute_columns || independent_resample; }
};

struct TrainConfig {
  BackboneConfig backbone;
  int batch_size = 64;  // j
  double tau = 0.05;
  int steps = 2000;
  double lr = 1e-3;
  double warmup_fraction = 0.02;
  int grad_accum = 1;
  double ema_momentum = 0.01;
  double bn_momentum = 0.1;
  int sample_multiplier = 25;
  int d_min = 2, d_max = 3;
  int m_min = 1, m_max = 2;
  std::uint64_t seed = 0;
  AugmentationSpec aug;
  int checkpoint_every = 500;

  void validate() const {
    backbone.validate();
    if (tau <= 0 || tau > 0.3)
      throw std::invalid_argument("TrainConfig: tau must be in (0, 0.3]");
    if (batch_size < 2)
      throw std::invalid_argument("TrainConfig: batch_size must be >= 2");
    if (steps < 1 || grad_accum < 1 || sample_multiplier < 1)
      throw std::invalid_argument("TrainConfig: steps/grad_accum/multiplier >= 1");
    if (d_min < 1 || d_max < d_min || m_min < 1 || m_max < m_min)
      throw std::invalid_argument("TrainConfig: bad d/m ranges");
    if (d_max > backbone.nu || m_max > backbone.nu)
      throw std::invalid_argument("TrainConfig: d or m may exceed nu");
    if (!aug.any())
      throw std::invalid_argument("TrainConfig: at least one augmentation required");
  }
};

// ------------------------------------------------------------------- views

/// Draws one view: fresh X (unless given), Y evaluated before the geometric
/// transforms so the underlying problem is untouched, then rotation about the
/// box center, per-dimension sign inversions, and independent column
/// permutations of the decision and objective blocks.
inline std::optional<Sample> make_view(const ProblemInstance& inst, int n,
                                       const AugmentationSpec& spec, Rng& rng,
                                       const Matrix* shared_x = nullptr) {
  Sample s;
  s.X = shared_x ? *shared_x : sampling::uniform_sample(inst.bounds, n, rng);
  auto y = inst.evaluate(s.X);
  if (!y) return std::nullopt;
  s.Y = *y;
  const int d = inst.d;
  const Vector c = inst.bounds.center();
  if (spec.rotate) {
    Matrix r = random_rotation(d, rng);
    s.X = ((s.X.rowwise() - c.transpose()) * r.transpose()).rowwise() + c.transpose();
  }
  if (spec.invert) {
    for (int j = 0; j < d; ++j)
      if (rng.coin()) s.X.col(j) = (c[j] - (s.X.col(j).array() - c[j])).matrix();
  }
  if (spec.permute_columns) {
    auto permute = [&](Matrix& m) {
      const int cols = static_cast<int>(m.cols());
      std::vector<int> p(cols);
      for (int i = 0; i < cols; ++i) p[i] = i;
      for (int i = cols - 1; i > 0; --i) std::swap(p[i], p[static_cast<int>(rng.below(i + 1))]);
      Matrix out(m.rows(), cols);
      for (int i = 0; i < cols; ++i) out.col(i) = m.col(p[i]);
      m = out;
    };
    permute(s.X);
    permute(s.Y);
  }
  return s;
}

inline std::optional<std::pair<Sample, Sample>> make_views(const ProblemInstance& inst,
                                                           int n,
                                                           const AugmentationSpec& spec,
                                                           Rng& rng) {
  std::optional<Matrix> shared;
  if (!spec.independent_resample)
    shared = sampling::uniform_sample(inst.bounds, n, rng);
  auto a = make_view(inst, n, spec, rng, shared ? &*shared : nullptr);
  if (!a) return std::nullopt;
  auto b = make_view(inst, n, spec, rng, shared ? &*shared : nullptr);
  if (!b) return std::nullopt;
  return std::make_pair(std::move(*a), std::move(*b));
}

// -------------------------------------------------------------------- loss

/// L = 2*tau * (1/j) * sum_i -log softmax(P P_target^T / tau)_ii.
/// Targets are treated as constants; gradients flow into `p` only.
template <class S>
int info_nce(Tape<S>& t, int p, int target, double tau) {
  if (tau <= 0) throw std::invalid_argument("info_nce: tau must be > 0");
  if (t.value(p).rows() != t.value(target).rows() ||
      t.value(p).cols() != t.value(target).cols())
    throw std::invalid_argument("info_nce: shape mismatch");
  if (!t.value(p).allFinite() || !t.value(target).allFinite())
    throw std::runtime_error("info_nce: non-finite projections");
  int logits = t.scale(t.matmul_nt(p, target), static_cast<S>(1.0 / tau));
  return t.scale(t.diag_cross_entropy(logits), static_cast<S>(2.0 * tau));
}

template <class S>
double info_nce_value(const Mat<S>& p, const Mat<S>& target, double tau) {
  Tape<S> t;
  int a = t.push_leaf(p, false), b = t.push_leaf(target, false);
  return static_cast<double>(t.value(info_nce(t, a, b, tau))(0, 0));
}

/// 0.5 * (info_nce(P1, T2) + info_nce(P2, T1)); students in gradient
/// position, teacher projections crossed in as fixed targets.
template <class S>
int symmetric_loss(Tape<S>& t, int p1, int p2, int t1, int t2, double tau) {
  int a = info_nce(t, p1, t2, tau);
  int b = info_nce(t, p2, t1, tau);
  return t.scale(t.add(a, b), static_cast<S>(0.5));
}

// ------------------------------------------------------------------- state

struct LossBreakdown {
  double loss = 0;
  double pos_cos = 0;
  double neg_cos = 0;
  double lr = 0;
};

template <class S>
struct TrainState {
  TrainConfig cfg;
  BackboneParams<S> student_bb;
  HeadParams<S> student_head;
  Mat<S> teacher_extractor;
  HeadParams<S> teacher_head;
  std::vector<Mat<S>> adam_m, adam_v;
  std::vector<Mat<S>> grad_accum;
  int accum_count = 0;
  std::int64_t step = 0;
  Rng rng{0};
};

template <class S>
std::vector<Mat<S>*> trainable(TrainState<S>& st) {
  std::vector<Mat<S>*> out;
  model::for_each_param(st.student_bb,
                        [&](const std::string&, Mat<S>& m) { out.push_back(&m); });
  model::for_each_param(st.student_head,
                        [&](const std::string&, Mat<S>& m) { out.push_back(&m); });
  return out;
}

template <class S>
TrainState<S> init_train_state(const TrainConfig& cfg) {
  cfg.validate();
  TrainState<S> st;
  st.cfg = cfg;
  st.rng = Rng(cfg.seed);
  st.student_bb = model::init_backbone<S>(cfg.backbone, st.rng);
  st.student_head = model::init_head<S>(cfg.backbone, st.rng);
  st.student_head.bn.momentum = cfg.bn_momentum;
  st.teacher_extractor = st.student_bb.extractor;
  st.teacher_head = st.student_head;
  auto params = trainable(st);
  for (auto* p : params) {
    st.adam_m.push_back(Mat<S>::Zero(p->rows(), p->cols()));
    st.adam_v.push_back(Mat<S>::Zero(p->rows(), p->cols()));
    st.grad_accum.push_back(Mat<S>::Zero(p->rows(), p->cols()));
  }
  return st;
}

// -------------------------------------------------------------- train step

template <class S>
double cosine(const Eigen::Ref<const Mat<S>>& a, const Eigen::Ref<const Mat<S>>& b) {
  double na = a.norm(), nb = b.norm();
  if (na == 0 || nb == 0) return 0;
  return static_cast<double>((a.array() * b.array()).sum()) / (na * nb);
}

template <class S>
double warmup_lr(const TrainConfig& cfg, std::int64_t step) {
  auto warm = static_cast<std::int64_t>(
      std::max(1.0, cfg.warmup_fraction * static_cast<double>(cfg.steps)));
  double f = std::min(1.0, static_cast<double>(step) / static_cast<double>(warm));
  return cfg.lr * f;
}

/// One batch: views, tokens, student/teacher projections, symmetric InfoNCE,
/// gradient accumulation, Adam update every grad_accum batches, then the EMA
/// move of the teacher extractor/head copies.
template <class S>
LossBreakdown train_step(TrainState<S>& st, const std::vector<const ProblemInstance*>& batch) {
  const TrainConfig& cfg = st.cfg;
  const BackboneConfig& bc = cfg.backbone;
  if (static_cast<int>(batch.size()) != cfg.batch_size)
    throw std::invalid_argument("train_step: batch size mismatch");

  Tape<S> t;   // student graph
  Tape<S> tt;  // teacher graph, never differentiated
  auto sids = model::push_backbone(t, st.student_bb, true);
  auto shid = model::push_head(t, st.student_head, true);
  auto tids = model::push_backbone(tt, st.student_bb, false);
  tids.extractor = tt.push_leaf(st.teacher_extractor, false);
  auto thid = model::push_head(tt, st.teacher_head, false);

  std::vector<int> f1, f2, g1, g2;
  for (const ProblemInstance* inst : batch) {
    const int n = std::max(bc.k, cfg.sample_multiplier * inst->d);
    auto views = make_views(*inst, n, cfg.aug, st.rng);
    if (!views) continue;  // evaluation failure: instance skipped
    auto tok1 = tokenizer::tokenize(views->first, bc.k, bc.nu, bc.stride);
    auto tok2 = tokenizer::tokenize(views->second, bc.k, bc.nu, bc.stride);
    int n1 = t.push_leaf(tok1.tokens.template cast<S>(), false);
    int n2 = t.push_leaf(tok2.tokens.template cast<S>(), false);
    f1.push_back(model::backbone_forward(t, sids, n1, bc, true, &st.rng));
    f2.push_back(model::backbone_forward(t, sids, n2, bc, true, &st.rng));
    int m1 = tt.push_leaf(tok1.tokens.template cast<S>(), false);
    int m2 = tt.push_leaf(tok2.tokens.template cast<S>(), false);
    g1.push_back(model::backbone_forward(tt, tids, m1, bc, false, nullptr));
    g2.push_back(model::backbone_forward(tt, tids, m2, bc, false, nullptr));
  }
  if (static_cast<int>(f1.size()) < 2)
    throw std::runtime_error("train_step: fewer than 2 evaluable instances in batch");

  int feat1 = t.concat_rows(f1);
  int feat2 = t.concat_rows(f2);
  int p1 = model::head_forward(t, shid, feat1, st.student_head.bn, bc.dropout, true,
                               &st.rng);
  int p2 = model::head_forward(t, shid, feat2, st.student_head.bn, bc.dropout, true,
                               &st.rng);
  int tf1 = tt.concat_rows(g1);
  int tf2 = tt.concat_rows(g2);
  int q1 = model::head_forward(tt, thid, tf1, st.teacher_head.bn, 0.0, false, nullptr);
  int q2 = model::head_forward(tt, thid, tf2, st.teacher_head.bn, 0.0, false, nullptr);
  int tgt1 = t.push_leaf(tt.value(q1), false);
  int tgt2 = t.push_leaf(tt.value(q2), false);

  int loss = symmetric_loss(t, p1, p2, tgt1, tgt2, cfg.tau);
  double loss_v = static_cast<double>(t.value(loss)(0, 0));
  if (!std::isfinite(loss_v)) {
    std::ostringstream os;
    os << "train_step: non-finite loss at step " << st.step << " (|P1|max="
       << t.value(p1).cwiseAbs().maxCoeff() << ")";
    throw std::runtime_error(os.str());
  }
  t.backward(loss);

  // accumulate
  {
    auto params = trainable(st);
    std::vector<int> ids;
    auto collect = [&](const auto& tb) {
      ids.push_back(tb.embed_w);
      ids.push_back(tb.embed_b);
      for (const auto& b : tb.blocks) {
        ids.insert(ids.end(), {b.ln1_g, b.ln1_b, b.wq, b.wk, b.wv, b.wo, b.ln2_g,
                               b.ln2_b, b.ff1, b.ff2});
      }
      ids.push_back(tb.lnf_g);
      ids.push_back(tb.lnf_b);
      ids.push_back(tb.extractor);
    };
    collect(sids);
    ids.insert(ids.end(), {shid.w1, shid.w2, shid.w3});
    const S inv_accum = static_cast<S>(1.0 / cfg.grad_accum);
    for (std::size_t i = 0; i < params.size(); ++i)
      st.grad_accum[i] += t.grad(ids[i]) * inv_accum;
  }
  st.accum_count += 1;
  st.step += 1;
  double lr_now = warmup_lr<S>(cfg, st.step);

  if (st.accum_count >= cfg.grad_accum) {
    auto params = trainable(st);
    const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    const auto adam_t = static_cast<double>((st.step + cfg.grad_accum - 1) / cfg.grad_accum);
    for (std::size_t i = 0; i < params.size(); ++i) {
      st.adam_m[i] = static_cast<S>(b1) * st.adam_m[i] +
                     static_cast<S>(1 - b1) * st.grad_accum[i];
      st.adam_v[i] = (static_cast<S>(b2) * st.adam_v[i].array() +
                      static_cast<S>(1 - b2) * st.grad_accum[i].array().square())
                         .matrix();
      Mat<S> mhat = st.adam_m[i] / static_cast<S>(1 - std::pow(b1, adam_t));
      Mat<S> vhat = st.adam_v[i] / static_cast<S>(1 - std::pow(b2, adam_t));
      *params[i] -= (static_cast<S>(lr_now) * mhat.array() /
                     (vhat.array().sqrt() + static_cast<S>(eps)))
                        .matrix();
      st.grad_accum[i].setZero();
    }
    st.accum_count = 0;
    // EMA: teacher extractor + head toward the student copies.
    const S mu = static_cast<S>(cfg.ema_momentum);
    st.teacher_extractor =
        (S(1) - mu) * st.teacher_extractor + mu * st.student_bb.extractor;
    st.teacher_head.w1 = (S(1) - mu) * st.teacher_head.w1 + mu * st.student_head.w1;
    st.teacher_head.w2 = (S(1) - mu) * st.teacher_head.w2 + mu * st.student_head.w2;
    st.teacher_head.w3 = (S(1) - mu) * st.teacher_head.w3 + mu * st.student_head.w3;
    st.teacher_head.bn.running_mean = (S(1) - mu) * st.teacher_head.bn.running_mean +
                                      mu * st.student_head.bn.running_mean;
    st.teacher_head.bn.running_var = (S(1) - mu) * st.teacher_head.bn.running_var +
                                     mu * st.student_head.bn.running_var;
  }

  LossBreakdown out;
  out.loss = loss_v;
  out.lr = lr_now;
  const Mat<S>& a = t.value(p1);
  const Mat<S>& b = t.value(p2);
  const int j = static_cast<int>(a.rows());
  double pos = 0, neg = 0;
  int negc = 0;
  for (int i = 0; i < j; ++i) {
    pos += cosine<S>(a.row(i), b.row(i));
    for (int l = 0; l < j; ++l)
      if (l != i) {
        neg += cosine<S>(a.row(i), b.row(l));
        ++negc;
      }
  }
  out.pos_cos = pos / j;
  out.neg_cos = negc ? neg / negc : 0;
  return out;
}

/// Cycles random corpus batches until cfg.steps is reached. Emits one metrics
/// CSV line per step and periodic checkpoints (atomic rename). Returns the
/// last step's loss.
template <class S>
double run_training(TrainState<S>& st, const std::vector<ProblemInstance>& corpus,
                    std::ostream* metrics, const std::string& ckpt_path,
                    std::vector<double>* loss_trace = nullptr) {
  if (corpus.empty()) throw std::invalid_argument("run_training: empty corpus");
  for (const auto& inst : corpus)
    if (inst.d > st.cfg.backbone.nu || inst.m > st.cfg.backbone.nu)
      throw std::invalid_argument(
          "run_training: corpus instance exceeds nu (dimensional violation)");
  if (metrics && st.step == 0) *metrics << "step,loss,pos_cos,neg_cos,lr\n";
  double last = 0;
  while (st.step < st.cfg.steps) {
    std::vector<const ProblemInstance*> batch(st.cfg.batch_size);
    for (auto& b : batch) b = &corpus[st.rng.below(corpus.size())];
    LossBreakdown lb = train_step(st, batch);
    last = lb.loss;
    if (loss_trace) loss_trace->push_back(lb.loss);
    if (metrics)
      *metrics << st.step << ',' << lb.loss << ',' << lb.pos_cos << ',' << lb.neg_cos
               << ',' << lb.lr << '\n';
    if (!ckpt_path.empty() &&
        (st.step % st.cfg.checkpoint_every == 0 || st.step == st.cfg.steps)) {
      auto snap = to_snapshot(st);
      checkpoint::save_checkpoint(ckpt_path, snap);
    }
  }
  if (!ckpt_path.empty()) {
    auto snap = to_snapshot(st);
    checkpoint::save_checkpoint(ckpt_path, snap);
  }
  return last;
}

// -------------------------------------------------------------- alignment

struct AlignmentReport {
  double pos_mean = 0;
  double neg_mean = 0;
  double fraction = 0;  // instances whose positive similarity beats neg_mean
  int n_instances = 0;
};

template <class S>
AlignmentReport alignment_report(const BackboneParams<S>& params,
                                 const BackboneConfig& cfg,
                                 const std::vector<ProblemInstance>& instances,
                                 int multiplier, const AugmentationSpec& spec,
                                 Rng& rng) {
  if (instances.size() < 2)
    throw std::invalid_argument("alignment_report: need >= 2 instances");
  std::vector<Vector> fa, fb;
  for (const auto& inst : instances) {
    const int n = std::max(cfg.k, multiplier * inst.d);
    auto views = make_views(inst, n, spec, rng);
    if (!views) continue;
    fa.push_back(model::forward_features(
        params, cfg, tokenizer::tokenize(views->first, cfg.k, cfg.nu, cfg.stride)));
    fb.push_back(model::forward_features(
        params, cfg, tokenizer::tokenize(views->second, cfg.k, cfg.nu, cfg.stride)));
  }
  const int n = static_cast<int>(fa.size());
  AlignmentReport rep;
  rep.n_instances = n;
  auto cosv = [](const Vector& x, const Vector& y) {
    double nx = x.norm(), ny = y.norm();
    return nx == 0 || ny == 0 ? 0.0 : x.dot(y) / (nx * ny);
  };
  std::vector<double> pos(n);
  double neg = 0;
  int negc = 0;
  for (int i = 0; i < n; ++i) {
    pos[i] = cosv(fa[i], fb[i]);
    rep.pos_mean += pos[i];
    for (int l = 0; l < n; ++l)
      if (l != i) {
        neg += cosv(fa[i], fa[l]);
        ++negc;
      }
  }
  rep.pos_mean /= n;
  rep.neg_mean = negc ? neg / negc : 0;
  int wins = 0;
  for (double p : pos) wins += p > rep.neg_mean ? 1 : 0;
  rep.fraction = static_cast<double>(wins) / n;
  return rep;
}

// ------------------------------------------------------------- persistence

inline std::string train_config_text(const TrainConfig& c) {
  std::ostringstream os;
  os << "nu=" << c.backbone.nu << "\nk=" << c.backbone.k
     << "\nheads=" << c.backbone.heads << "\nd_model=" << c.backbone.d_model
     << "\ndepth=" << c.backbone.depth << "\nn_feat=" << c.backbone.n_feat
     << "\nstride=" << c.backbone.stride << "\ndropout=" << c.backbone.dropout
     << "\nbatch_size=" << c.batch_size << "\ntau=" << c.tau << "\nsteps=" << c.steps
     << "\nlr=" << c.lr << "\nwarmup_fraction=" << c.warmup_fraction
     << "\ngrad_accum=" << c.grad_accum << "\nema_momentum=" << c.ema_momentum
     << "\nbn_momentum=" << c.bn_momentum << "\nsample_multiplier="
     << c.sample_multiplier << "\nd_min=" << c.d_min << "\nd_max=" << c.d_max
     << "\nm_min=" << c.m_min << "\nm_max=" << c.m_max << "\nseed=" << c.seed << "\n";
  return os.str();
}

template <class S>
checkpoint::Snapshot<S> to_snapshot(TrainState<S>& st) {
  checkpoint::Snapshot<S> snap;
  snap.config_text = train_config_text(st.cfg);
  snap.step = static_cast<std::uint64_t>(st.step);
  std::ostringstream rs;
  rs << st.rng.engine();
  snap.rng_state = rs.str();
  model::for_each_param(st.student_bb, [&](const std::string& n, Mat<S>& m) {
    snap.tensors.emplace_back("student." + n, m);
  });
  model::for_each_param(st.student_head, [&](const std::string& n, Mat<S>& m) {
    snap.tensors.emplace_back("student." + n, m);
  });
  snap.tensors.emplace_back("student.head.bn.running_mean",
                            st.student_head.bn.running_mean);
  snap.tensors.emplace_back("student.head.bn.running_var",
                            st.student_head.bn.running_var);
  snap.tensors.emplace_back("teacher.extractor", st.teacher_extractor);
  model::for_each_param(st.teacher_head, [&](const std::string& n, Mat<S>& m) {
    snap.tensors.emplace_back("teacher." + n, m);
  });
  snap.tensors.emplace_back("teacher.head.bn.running_mean",
                            st.teacher_head.bn.running_mean);
  snap.tensors.emplace_back("teacher.head.bn.running_var",
                            st.teacher_head.bn.running_var);
  auto params = trainable(st);
  for (std::size_t i = 0; i < params.size(); ++i) {
    snap.tensors.emplace_back("opt.m." + std::to_string(i), st.adam_m[i]);
    snap.tensors.emplace_back("opt.v." + std::to_string(i), st.adam_v[i]);
  }
  return snap;
}

inline TrainConfig parse_train_config_text(const std::string& text);

template <class S>
TrainState<S> from_snapshot(const checkpoint::Snapshot<S>& snap) {
  TrainConfig cfg = parse_train_config_text(snap.config_text);
  TrainState<S> st = init_train_state<S>(cfg);
  st.step = static_cast<std::int64_t>(snap.step);
  std::istringstream rs(snap.rng_state);
  rs >> st.rng.engine();
  model::for_each_param(st.student_bb, [&](const std::string& n, Mat<S>& m) {
    m = snap.find("student." + n);
  });
  model::for_each_param(st.student_head, [&](const std::string& n, Mat<S>& m) {
    m = snap.find("student." + n);
  });
  st.student_head.bn.running_mean = snap.find("student.head.bn.running_mean");
  st.student_head.bn.running_var = snap.find("student.head.bn.running_var");
  st.teacher_extractor = snap.find("teacher.extractor");
  model::for_each_param(st.teacher_head, [&](const std::string& n, Mat<S>& m) {
    m = snap.find("teacher." + n);
  });
  st.teacher_head.bn.running_mean = snap.find("teacher.head.bn.running_mean");
  st.teacher_head.bn.running_var = snap.find("teacher.head.bn.running_var");
  for (std::size_t i = 0; i < st.adam_m.size(); ++i) {
    st.adam_m[i] = snap.find("opt.m." + std::to_string(i));
    st.adam_v[i] = snap.find("opt.v." + std::to_string(i));
  }
  return st;
}

inline TrainConfig parse_train_config_text(const std::string& text) {
  TrainConfig c;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    std::string key = line.substr(0, eq), val = line.substr(eq + 1);
    if (key == "nu") c.backbone.nu = std::stoi(val);
    else if (key == "k") c.backbone.k = std::stoi(val);
    else if (key == "heads") c.backbone.heads = std::stoi(val);
    else if (key == "d_model") c.backbone.d_model = std::stoi(val);
    else if (key == "depth") c.backbone.depth = std::stoi(val);
    else if (key == "n_feat") c.backbone.n_feat = std::stoi(val);
    else if (key == "stride") c.backbone.stride = std::stoi(val);
    else if (key == "dropout") c.backbone.dropout = std::stod(val);
    else if (key == "batch_size") c.batch_size = std::stoi(val);
    else if (key == "tau") c.tau = std::stod(val);
    else if (key == "steps") c.steps = std::stoi(val);
    else if (key == "lr") c.lr = std::stod(val);
    else if (key == "warmup_fraction") c.warmup_fraction = std::stod(val);
    else if (key == "grad_accum") c.grad_accum = std::stoi(val);
    else if (key == "ema_momentum") c.ema_momentum = std::stod(val);
    else if (key == "bn_momentum") c.bn_momentum = std::stod(val);
    else if (key == "sample_multiplier") c.sample_multiplier = std::stoi(val);
    else if (key == "d_min") c.d_min = std::stoi(val);
    else if (key == "d_max") c.d_max = std::stoi(val);
    else if (key == "m_min") c.m_min = std::stoi(val);
    else if (key == "m_max") c.m_max = std::stoi(val);
    else if (key == "seed") c.seed = std::stoull(val);
    else throw std::invalid_argument("train config: unknown key " + key);
  }
  return c;
}

}  // namespace dela::pretrain
