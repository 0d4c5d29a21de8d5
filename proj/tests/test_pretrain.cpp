#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <sstream>

#include "dela/checkpoint.hpp"
#include "dela/pretrain.hpp"
#include "dela/randgen.hpp"

using namespace dela;
using namespace dela::pretrain;
using MatD = tensor::Mat<double>;

namespace {

TrainConfig micro_train_config() {
  TrainConfig c;
  c.backbone.nu = 2;
  c.backbone.k = 2;
  c.backbone.heads = 2;
  c.backbone.d_model = 8;
  c.backbone.depth = 1;
  c.backbone.n_feat = 4;
  c.backbone.stride = 1;
  c.batch_size = 4;
  c.sample_multiplier = 5;
  c.steps = 10;
  c.d_min = 2;
  c.d_max = 2;
  c.m_min = 1;
  c.m_max = 1;
  c.seed = 3;
  return c;
}

std::vector<ProblemInstance> micro_corpus(int count, std::uint64_t seed) {
  randgen::GeneratorConfig g;
  g.d = 2;
  Rng rng(seed);
  std::vector<ProblemInstance> out;
  for (int i = 0; i < count; ++i)
    out.push_back(randgen::generate_instance(2, 1, g, rng));
  return out;
}

MatD random_rows(int r, int c, std::uint64_t seed) {
  Rng rng(seed);
  MatD m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = rng.gauss();
  return m;
}

}  // namespace

TEST_CASE("info_nce closed-form fixtures") {
  MatD one = MatD::Ones(1, 3);
  CHECK(info_nce_value<double>(one, one, 0.05) == doctest::Approx(0.0).epsilon(1e-15));

  MatD eye = MatD::Identity(2, 2);
  const double expected = 2 * 0.05 * std::log1p(std::exp(-1.0 / 0.05));
  CHECK(std::abs(info_nce_value<double>(eye, eye, 0.05) - expected) < 1e-14);

  for (int j : {2, 5}) {
    MatD same(j, 4);
    for (int i = 0; i < j; ++i) same.row(i) << 0.3, -1.0, 2.0, 0.7;
    CHECK(info_nce_value<double>(same, same, 0.1) ==
          doctest::Approx(2 * 0.1 * std::log(double(j))).epsilon(1e-12));
  }
}

TEST_CASE("info_nce is invariant under a shared row permutation") {
  MatD p = random_rows(6, 5, 1), q = random_rows(6, 5, 2);
  double base = info_nce_value<double>(p, q, 0.07);
  MatD pr = p.colwise().reverse(), qr = q.colwise().reverse();
  CHECK(info_nce_value<double>(pr, qr, 0.07) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("info_nce is non-negative under fuzzing") {
  Rng rng(99);
  for (int trial = 0; trial < 500; ++trial) {
    int j = 2 + static_cast<int>(rng.below(6));
    int c = 2 + static_cast<int>(rng.below(6));
    MatD p(j, c), q(j, c);
    for (int i = 0; i < j; ++i)
      for (int l = 0; l < c; ++l) {
        p(i, l) = rng.gauss();
        q(i, l) = rng.gauss();
      }
    double tau = rng.uniform(1e-3, 0.3);
    CHECK(info_nce_value<double>(p, q, tau) >= -1e-12);
  }
}

TEST_CASE("info_nce gradient matches finite differences") {
  MatD p = random_rows(3, 4, 5), q = random_rows(3, 4, 6);
  tensor::Tape<double> t;
  int a = t.push_leaf(p, true);
  int b = t.push_leaf(q, false);
  int loss = info_nce(t, a, b, 0.1);
  t.backward(loss);
  MatD g = t.grad(a);
  const double h = 1e-6;
  for (auto [r, c] : {std::pair{0, 0}, std::pair{2, 3}, std::pair{1, 2}}) {
    MatD plus = p, minus = p;
    plus(r, c) += h;
    minus(r, c) -= h;
    double fd = (info_nce_value<double>(plus, q, 0.1) -
                 info_nce_value<double>(minus, q, 0.1)) /
                (2 * h);
    CHECK(g(r, c) == doctest::Approx(fd).epsilon(1e-5));
  }
}

TEST_CASE("symmetric loss averages the two directions") {
  MatD p1 = random_rows(4, 3, 7), p2 = random_rows(4, 3, 8);
  MatD t1 = random_rows(4, 3, 9), t2 = random_rows(4, 3, 10);
  tensor::Tape<double> t;
  int a = t.push_leaf(p1, false), b = t.push_leaf(p2, false);
  int c = t.push_leaf(t1, false), d = t.push_leaf(t2, false);
  double sym = t.value(symmetric_loss(t, a, b, c, d, 0.05))(0, 0);
  double manual = 0.5 * (info_nce_value<double>(p1, t2, 0.05) +
                         info_nce_value<double>(p2, t1, 0.05));
  CHECK(sym == doctest::Approx(manual).epsilon(1e-12));
}

TEST_CASE("views without augmentation reproduce the shared sample") {
  auto corpus = micro_corpus(1, 21);
  AugmentationSpec spec;
  spec.rotate = spec.invert = spec.permute_columns = false;
  spec.independent_resample = false;
  Rng rng(4);
  auto views = make_views(corpus[0], 20, spec, rng);
  REQUIRE(views.has_value());
  CHECK((views->first.X - views->second.X).cwiseAbs().maxCoeff() == 0.0);
  CHECK((views->first.Y - views->second.Y).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("objective values are taken before the geometric transforms") {
  auto corpus = micro_corpus(1, 22);
  AugmentationSpec spec;
  spec.independent_resample = false;  // the shared draw comes first from the rng
  Rng probe(11);
  Matrix x0 = sampling::uniform_sample(corpus[0].bounds, 25, probe);
  Rng rng(11);
  auto views = make_views(corpus[0], 25, spec, rng);
  REQUIRE(views.has_value());
  auto y0 = corpus[0].evaluate(x0);
  REQUIRE(y0.has_value());
  // columns may be permuted; with m = 1 the objective block is unchanged
  CHECK((views->first.Y - *y0).cwiseAbs().maxCoeff() < 1e-12);
  // the rotated/inverted X is generally different from the original
  CHECK((views->first.X - x0).cwiseAbs().maxCoeff() > 1e-9);
}

TEST_CASE("rotation and inversion preserve distances to the box center") {
  auto corpus = micro_corpus(1, 23);
  const Vector c = corpus[0].bounds.center();
  AugmentationSpec spec;
  spec.permute_columns = false;
  spec.independent_resample = false;
  Rng probe(31);
  Matrix x0 = sampling::uniform_sample(corpus[0].bounds, 30, probe);
  Rng rng(31);
  auto views = make_views(corpus[0], 30, spec, rng);
  REQUIRE(views.has_value());
  Vector d0 = (x0.rowwise() - c.transpose()).rowwise().norm();
  Vector d1 = (views->first.X.rowwise() - c.transpose()).rowwise().norm();
  CHECK((d0 - d1).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("column permutation keeps the multiset of columns") {
  auto corpus = micro_corpus(1, 24);
  AugmentationSpec spec;
  spec.rotate = spec.invert = false;
  spec.independent_resample = false;
  Rng probe(41);
  Matrix x0 = sampling::uniform_sample(corpus[0].bounds, 15, probe);
  Rng rng(41);
  auto views = make_views(corpus[0], 15, spec, rng);
  REQUIRE(views.has_value());
  for (int j = 0; j < 2; ++j) {
    bool found = false;
    for (int l = 0; l < 2; ++l)
      if ((views->first.X.col(j) - x0.col(l)).cwiseAbs().maxCoeff() == 0.0)
        found = true;
    CHECK(found);
  }
}

TEST_CASE("train config validation") {
  TrainConfig c = micro_train_config();
  c.tau = 0.5;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = micro_train_config();
  c.batch_size = 1;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = micro_train_config();
  c.d_max = 3;  // exceeds nu = 2
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = micro_train_config();
  c.aug = {false, false, false, false};
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("warmup ramps linearly to the base rate") {
  TrainConfig c = micro_train_config();
  c.steps = 100;
  c.warmup_fraction = 0.1;  // 10 warmup steps
  c.lr = 2e-3;
  CHECK(warmup_lr<double>(c, 5) == doctest::Approx(1e-3));
  CHECK(warmup_lr<double>(c, 10) == doctest::Approx(2e-3));
  CHECK(warmup_lr<double>(c, 80) == doctest::Approx(2e-3));
}

TEST_CASE("one training step moves the student and is deterministic") {
  auto corpus = micro_corpus(4, 25);
  std::vector<const ProblemInstance*> batch;
  for (const auto& inst : corpus) batch.push_back(&inst);

  auto s1 = init_train_state<double>(micro_train_config());
  auto s2 = init_train_state<double>(micro_train_config());
  MatD before = s1.student_bb.embed_w;
  auto r1 = train_step(s1, batch);
  auto r2 = train_step(s2, batch);
  CHECK(r1.loss == r2.loss);
  CHECK(std::isfinite(r1.loss));
  CHECK(r1.loss >= 0.0);
  CHECK(s1.step == 1);
  CHECK((s1.student_bb.embed_w - before).cwiseAbs().maxCoeff() > 0.0);
  CHECK((s1.student_bb.embed_w - s2.student_bb.embed_w).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("zero learning rate leaves the parameters in place") {
  auto corpus = micro_corpus(4, 26);
  std::vector<const ProblemInstance*> batch;
  for (const auto& inst : corpus) batch.push_back(&inst);
  TrainConfig c = micro_train_config();
  c.lr = 0.0;
  auto st = init_train_state<double>(c);
  MatD before = st.student_bb.embed_w;
  train_step(st, batch);
  CHECK((st.student_bb.embed_w - before).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("gradient accumulation defers the update") {
  auto corpus = micro_corpus(4, 27);
  std::vector<const ProblemInstance*> batch;
  for (const auto& inst : corpus) batch.push_back(&inst);
  TrainConfig c = micro_train_config();
  c.grad_accum = 2;
  auto st = init_train_state<double>(c);
  MatD before = st.student_bb.embed_w;
  train_step(st, batch);
  CHECK((st.student_bb.embed_w - before).cwiseAbs().maxCoeff() == 0.0);
  CHECK(st.accum_count == 1);
  train_step(st, batch);
  CHECK((st.student_bb.embed_w - before).cwiseAbs().maxCoeff() > 0.0);
  CHECK(st.accum_count == 0);
}

TEST_CASE("teacher copies drift toward the student") {
  auto corpus = micro_corpus(4, 28);
  std::vector<const ProblemInstance*> batch;
  for (const auto& inst : corpus) batch.push_back(&inst);
  auto st = init_train_state<double>(micro_train_config());
  for (int i = 0; i < 3; ++i) train_step(st, batch);
  // after updates the student extractor has moved away; the teacher lags it
  double gap_teacher =
      (st.teacher_extractor - st.student_bb.extractor).cwiseAbs().maxCoeff();
  CHECK(gap_teacher > 0.0);
  MatD teacher_before = st.teacher_extractor;
  train_step(st, batch);
  CHECK((st.teacher_extractor - teacher_before).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("config text round-trips") {
  TrainConfig c = micro_train_config();
  c.tau = 0.12;
  c.seed = 77;
  c.grad_accum = 3;
  TrainConfig back = parse_train_config_text(train_config_text(c));
  CHECK(back.backbone.nu == c.backbone.nu);
  CHECK(back.backbone.d_model == c.backbone.d_model);
  CHECK(back.tau == doctest::Approx(c.tau));
  CHECK(back.seed == 77);
  CHECK(back.grad_accum == 3);
  CHECK(back.sample_multiplier == c.sample_multiplier);
}

TEST_CASE("snapshot round-trip resumes identically") {
  auto corpus = micro_corpus(4, 29);
  std::vector<const ProblemInstance*> batch;
  for (const auto& inst : corpus) batch.push_back(&inst);
  auto st = init_train_state<double>(micro_train_config());
  for (int i = 0; i < 3; ++i) train_step(st, batch);

  const std::string path = "test_pretrain_ckpt.bin";
  checkpoint::save_checkpoint(path, to_snapshot(st));
  auto snap = checkpoint::load_checkpoint<double>(path);
  auto re = from_snapshot(snap);
  std::remove(path.c_str());

  CHECK(re.step == st.step);
  CHECK((re.student_bb.embed_w - st.student_bb.embed_w).cwiseAbs().maxCoeff() == 0.0);
  CHECK((re.teacher_extractor - st.teacher_extractor).cwiseAbs().maxCoeff() == 0.0);
  CHECK((re.adam_m[0] - st.adam_m[0]).cwiseAbs().maxCoeff() == 0.0);
  auto a = train_step(st, batch);
  auto b = train_step(re, batch);
  CHECK(a.loss == b.loss);
  CHECK((re.student_bb.embed_w - st.student_bb.embed_w).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("run_training rejects bad corpora and writes metrics") {
  auto st = init_train_state<double>(micro_train_config());
  std::vector<ProblemInstance> empty;
  CHECK_THROWS_AS(run_training(st, empty, nullptr, ""), std::invalid_argument);

  randgen::GeneratorConfig g;
  g.d = 3;
  Rng rng(30);
  std::vector<ProblemInstance> wide{randgen::generate_instance(3, 1, g, rng)};
  CHECK_THROWS_AS(run_training(st, wide, nullptr, ""), std::invalid_argument);

  auto corpus = micro_corpus(4, 31);
  std::ostringstream metrics;
  std::vector<double> trace;
  run_training(st, corpus, &metrics, "", &trace);
  CHECK(st.step == st.cfg.steps);
  CHECK(static_cast<int>(trace.size()) == st.cfg.steps);
  std::string head = metrics.str().substr(0, metrics.str().find('\n'));
  CHECK(head == "step,loss,pos_cos,neg_cos,lr");
}

TEST_CASE("alignment report sane on random features") {
  auto corpus = micro_corpus(5, 32);
  TrainConfig c = micro_train_config();
  Rng rng(33);
  auto bb = model::init_backbone<double>(c.backbone, rng);
  Rng arng(34);
  auto rep = alignment_report(bb, c.backbone, corpus, 10, c.aug, arng);
  CHECK(rep.n_instances == 5);
  CHECK(rep.fraction >= 0.0);
  CHECK(rep.fraction <= 1.0);
  CHECK(std::abs(rep.pos_mean) <= 1.0);
  CHECK(std::abs(rep.neg_mean) <= 1.0);
}
