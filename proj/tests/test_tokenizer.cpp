#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "dela/rng.hpp"
#include "dela/sampling.hpp"
#include "dela/tokenizer.hpp"

using namespace dela;
using namespace dela::tokenizer;

namespace {

Sample random_sample(int n, int d, int m, std::uint64_t seed) {
  Rng rng(seed);
  Sample s;
  s.X = sampling::uniform_sample(Box::cube(d, -5, 5), n, rng);
  s.Y.resize(n, m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) s.Y(i, j) = rng.gauss() + s.X.row(i).squaredNorm();
  return s;
}

}  // namespace

TEST_CASE("standardize centers and scales, zeros out constant columns") {
  Matrix m(4, 3);
  m << 1, 7, 2, 2, 7, 4, 3, 7, 6, 4, 7, 8;
  Matrix s = standardize(m);
  for (int j : {0, 2}) {
    CHECK(s.col(j).mean() == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(s.col(j).array().square().mean() == doctest::Approx(1.0));
  }
  CHECK(s.col(1).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(standardize(Matrix::Ones(1, 2)), std::invalid_argument);
}

TEST_CASE("pad_and_concat block layout") {
  Matrix xs(2, 2), ys(2, 1);
  xs << 1, 2, 3, 4;
  ys << 9, 8;
  Matrix t = pad_and_concat(xs, ys, 3);
  REQUIRE(t.cols() == 6);
  CHECK(t(0, 0) == 1);
  CHECK(t(0, 1) == 2);
  CHECK(t(0, 2) == 0);  // decision padding
  CHECK(t(0, 3) == 9);
  CHECK(t(0, 4) == 0);  // objective padding
  CHECK(t(1, 3) == 8);

  // each block is padded on its own, so d and m are limited separately
  CHECK_NOTHROW(pad_and_concat(Matrix::Ones(2, 3), Matrix::Ones(2, 2), 3));
  CHECK_THROWS_AS(pad_and_concat(Matrix::Ones(2, 4), ys, 3), std::invalid_argument);
  CHECK_THROWS_AS(pad_and_concat(xs, Matrix::Ones(2, 4), 3), std::invalid_argument);
  CHECK_THROWS_AS(pad_and_concat(xs, Matrix::Ones(3, 1), 3), std::invalid_argument);
}

TEST_CASE("knn embedding: self first, neighbors as offsets, ties to smaller index") {
  // d=1, nu=2 layout: [x, 0, y, 0]; distances use the decision block only
  Matrix t(3, 4);
  t << 0, 0, 10, 0,   // point a at x=0
      1, 0, 20, 0,    // point b at x=1
      -1, 0, 30, 0;   // point c at x=-1, same distance to a as b
  TokenSet ts = knn_embed(t, 2, 1, 1, 2);
  REQUIRE(ts.tokens.cols() == 8);
  CHECK((ts.tokens.block(0, 0, 1, 4) - t.row(0)).cwiseAbs().maxCoeff() == 0.0);
  // tie between b and c resolves to the smaller index (b)
  CHECK(ts.tokens(0, 4) == 1.0);
  CHECK(ts.tokens(0, 6) == 10.0);  // y offset 20 - 10
  // b's nearest neighbor is a
  CHECK(ts.tokens(1, 4) == -1.0);
  CHECK(ts.tokens(1, 6) == -10.0);
  CHECK(ts.n_original == 3);
  CHECK_THROWS_AS(knn_embed(t, 4, 1, 1, 2), std::invalid_argument);
  CHECK_THROWS_AS(knn_embed(t, 0, 1, 1, 2), std::invalid_argument);
}

TEST_CASE("objective values do not affect the neighbor choice") {
  Matrix t(3, 4);
  t << 0, 0, 1000, 0, 1, 0, 0, 0, 3, 0, -1000, 0;
  TokenSet ts = knn_embed(t, 2, 1, 1, 2);
  CHECK(ts.tokens(0, 4) == 1.0);  // x=1 is closer despite the huge y gap
}

TEST_CASE("stride keeps every s-th token") {
  Matrix t(5, 4);
  for (int i = 0; i < 5; ++i) t.row(i) << i, 0, 2 * i, 0;
  TokenSet ts = knn_embed(t, 2, 1, 1, 2);
  TokenSet s2 = apply_stride(ts, 2);
  REQUIRE(s2.tokens.rows() == 3);
  CHECK((s2.tokens.row(0) - ts.tokens.row(0)).cwiseAbs().maxCoeff() == 0.0);
  CHECK((s2.tokens.row(1) - ts.tokens.row(2)).cwiseAbs().maxCoeff() == 0.0);
  CHECK((s2.tokens.row(2) - ts.tokens.row(4)).cwiseAbs().maxCoeff() == 0.0);
  CHECK(s2.stride == 2);
  CHECK(s2.n_original == 5);
  CHECK_THROWS_AS(apply_stride(ts, 0), std::invalid_argument);
}

TEST_CASE("tokenize is invariant to affine scaling of X and Y") {
  Sample s = random_sample(40, 2, 1, 11);
  Sample scaled;
  scaled.X = 3.0 * s.X;
  scaled.X.array() += 7.0;
  scaled.Y = 0.5 * s.Y;
  scaled.Y.array() -= 2.0;
  TokenSet a = tokenize(s, 4, 3, 1);
  TokenSet b = tokenize(scaled, 4, 3, 1);
  CHECK((a.tokens - b.tokens).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("tokenize permutes rows along with the sample") {
  Sample s = random_sample(30, 3, 2, 13);
  Sample rev;
  rev.X = s.X.colwise().reverse();
  rev.Y = s.Y.colwise().reverse();
  TokenSet a = tokenize(s, 5, 4, 1);
  TokenSet b = tokenize(rev, 5, 4, 1);
  CHECK((a.tokens - b.tokens.colwise().reverse()).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("tokenize output shape") {
  Sample s = random_sample(25, 2, 1, 17);
  TokenSet ts = tokenize(s, 8, 6, 2);
  CHECK(ts.tokens.rows() == 13);
  CHECK(ts.tokens.cols() == 2 * 8 * 6);
  CHECK(ts.d == 2);
  CHECK(ts.m == 1);
}
