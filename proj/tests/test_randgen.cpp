#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "dela/randgen.hpp"
#include "dela/sampling.hpp"

using namespace dela;
using namespace dela::randgen;

namespace {

ExprNode leaf_var(int i) {
  ExprNode n;
  n.kind = OpKind::Variable;
  n.var_index = i;
  return n;
}

ExprNode leaf_const(double v) {
  ExprNode n;
  n.kind = OpKind::Constant;
  n.value = v;
  return n;
}

ExprNode unary(OpKind k, ExprNode c) {
  ExprNode n;
  n.kind = k;
  n.children.push_back(std::move(c));
  return n;
}

ExprNode binary(OpKind k, ExprNode a, ExprNode b) {
  ExprNode n;
  n.kind = k;
  n.children.push_back(std::move(a));
  n.children.push_back(std::move(b));
  return n;
}

}  // namespace

TEST_CASE("operator counting ignores leaves") {
  ExprNode t = binary(OpKind::Add, leaf_var(0), unary(OpKind::Sin, leaf_const(2.0)));
  CHECK(count_ops(t) == 2);
  CHECK(count_ops(leaf_var(0)) == 0);
  CHECK(arity(OpKind::MeanRed) == 0);
  CHECK(is_leaf(OpKind::Constant));
  CHECK_FALSE(is_leaf(OpKind::LinearTerm));
}

TEST_CASE("protected division returns the numerator at tiny denominators") {
  Matrix x(2, 1);
  x << 3.0, 4.0;
  auto t = binary(OpKind::Div, leaf_var(0), leaf_const(0.0));
  auto y = evaluate_tree(t, x);
  REQUIRE(y.has_value());
  CHECK((*y)[0] == 3.0);
  CHECK((*y)[1] == 4.0);
  auto t2 = binary(OpKind::Div, leaf_const(1.0), leaf_var(0));
  auto y2 = evaluate_tree(t2, x);
  CHECK((*y2)[0] == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("protected log, sqrt and clamped exp") {
  Matrix x(1, 1);
  x << -4.0;
  CHECK((*evaluate_tree(unary(OpKind::Sqrt, leaf_var(0)), x))[0] == 2.0);
  CHECK((*evaluate_tree(unary(OpKind::Log, leaf_var(0)), x))[0] ==
        doctest::Approx(std::log(4.0 + 1e-9)));
  Matrix big(1, 1);
  big << 1000.0;
  auto y = evaluate_tree(unary(OpKind::Exp, leaf_var(0)), big);
  REQUIRE(y.has_value());
  CHECK((*y)[0] == doctest::Approx(std::exp(50.0)));
  // log of zero is finite under the epsilon guard
  Matrix z = Matrix::Zero(1, 1);
  CHECK(std::isfinite((*evaluate_tree(unary(OpKind::Log, leaf_var(0)), z))[0]));
}

TEST_CASE("reductions act on the whole decision vector") {
  Matrix x(1, 3);
  x << 1.0, 2.0, 6.0;
  ExprNode mean;
  mean.kind = OpKind::MeanRed;
  CHECK((*evaluate_tree(mean, x))[0] == 3.0);
  ExprNode mx;
  mx.kind = OpKind::MaxRed;
  CHECK((*evaluate_tree(mx, x))[0] == 6.0);
}

TEST_CASE("generated trees respect the operator budget") {
  GeneratorConfig cfg;
  cfg.d = 3;
  cfg.op_lower = 4;
  cfg.op_upper = 32;
  Rng rng(9);
  for (int i = 0; i < 200; ++i) {
    ExprNode t = generate_tree(cfg, rng);
    const int ops = count_ops(t);
    CHECK(ops >= 4);
    CHECK(ops <= 32);
  }
}

TEST_CASE("generation is deterministic given the seed") {
  GeneratorConfig cfg;
  cfg.d = 2;
  Rng a(5), b(5);
  auto i1 = generate_instance(2, 2, cfg, a);
  auto i2 = generate_instance(2, 2, cfg, b);
  CHECK(serialize_instance(i1) == serialize_instance(i2));
}

TEST_CASE("filter rejects constant and overflowing objectives") {
  GeneratorConfig cfg;
  cfg.d = 2;
  Rng rng(1);

  ProblemInstance constant;
  constant.bounds = Box::cube(2, -5, 5);
  constant.d = 2;
  constant.m = 1;
  Objective obj;
  obj.tree = leaf_const(1.5);
  constant.objectives.push_back(obj);
  CHECK_FALSE(accept_instance(constant, cfg, rng));

  ProblemInstance overflow = constant;
  overflow.objectives[0].tree = binary(
      OpKind::Mul, leaf_const(1e6), binary(OpKind::Mul, leaf_var(0), leaf_var(0)));
  CHECK_FALSE(accept_instance(overflow, cfg, rng));  // exceeds the 1e7 cap

  ProblemInstance fine = constant;
  fine.objectives[0].tree = binary(OpKind::Add, leaf_var(0), leaf_var(1));
  CHECK(accept_instance(fine, cfg, rng));
}

TEST_CASE("accepted instances satisfy the filter on an independent re-probe") {
  GeneratorConfig cfg;
  cfg.d = 2;
  Rng rng(77);
  int ok = 0;
  const int total = 200;
  for (int i = 0; i < total; ++i) {
    auto inst = generate_instance(2, 1, cfg, rng);
    Rng probe(1000 + i);
    if (accept_instance(inst, cfg, probe)) ++ok;
  }
  CHECK(ok >= 0.95 * total);  // std margin may flip borderline cases
}

TEST_CASE("retry budget error surfaces") {
  GeneratorConfig cfg;
  cfg.d = 2;
  cfg.min_std = 1e9;  // std cannot exceed the 1e7 value cap
  Rng rng(3);
  CHECK_THROWS_AS(generate_instance(2, 1, cfg, rng), RetryBudgetError);
}

TEST_CASE("tree serialization round-trips") {
  GeneratorConfig cfg;
  cfg.d = 4;
  Rng rng(13);
  Matrix x = sampling::uniform_sample(Box::cube(4, -5, 5), 32, rng);
  for (int i = 0; i < 50; ++i) {
    ExprNode t = generate_tree(cfg, rng);
    ExprNode back = parse_tree(serialize_tree(t));
    CHECK(serialize_tree(back) == serialize_tree(t));
    auto y1 = evaluate_tree(t, x), y2 = evaluate_tree(back, x);
    CHECK(y1.has_value() == y2.has_value());
    if (y1 && y2) CHECK((*y1 - *y2).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("instance serialization round-trips including bounds and m") {
  GeneratorConfig cfg;
  cfg.d = 3;
  Rng rng(21);
  auto inst = generate_instance(3, 2, cfg, rng);
  auto back = parse_instance(serialize_instance(inst));
  CHECK(back.d == 3);
  CHECK(back.m == 2);
  CHECK(back.bounds.lo[0] == -5.0);
  CHECK(back.bounds.hi[2] == 5.0);
  Matrix x = sampling::uniform_sample(inst.bounds, 20, rng);
  auto y1 = inst.evaluate(x), y2 = back.evaluate(x);
  REQUIRE(y1.has_value());
  REQUIRE(y2.has_value());
  CHECK((*y1 - *y2).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("malformed records are rejected") {
  CHECK_THROWS(parse_tree("bogus"));
  CHECK_THROWS(parse_tree("add x0"));        // missing operand
  CHECK_THROWS(parse_tree("x0 x1"));         // trailing tokens
  CHECK_THROWS(parse_instance("no bar"));
  CHECK_THROWS(parse_instance("d=2 m=2 lo=-5 hi=5 origin=random | x0"));
}

TEST_CASE("generation statistics add up") {
  GeneratorConfig cfg;
  cfg.d = 2;
  Rng rng(4);
  GenStats stats;
  for (int i = 0; i < 20; ++i) generate_instance(2, 1, cfg, rng, &stats);
  CHECK(stats.accepted == 20);
  CHECK(stats.attempts >= stats.accepted);
  CHECK(stats.acceptance_rate() > 0.0);
  CHECK(stats.acceptance_rate() <= 1.0);
  long long hist_total = 0;
  for (const auto& [op, c] : stats.op_histogram) hist_total += c;
  CHECK(hist_total >= 4 * stats.accepted);
}
