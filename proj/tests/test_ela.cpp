#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "dela/ela.hpp"
#include "dela/rng.hpp"
#include "dela/sampling.hpp"

using namespace dela;
using namespace dela::ela;

namespace {

Sample sphere_sample(int n, int d, std::uint64_t seed) {
  Rng rng(seed);
  Sample s;
  s.X = sampling::uniform_sample(Box::cube(d, -5, 5), n, rng);
  s.Y = s.X.rowwise().squaredNorm();
  return s;
}

double get(const FeatureMap& m, const std::string& key) {
  for (const auto& [k, v] : m)
    if (k == key) return v;
  throw std::out_of_range("missing feature " + key);
}

}  // namespace

TEST_CASE("dispersion of a full fraction is the identity") {
  Sample s = sphere_sample(40, 2, 1);
  FeatureMap m = ela_dispersion(s, {1.0});
  CHECK(get(m, "disp.ratio_1.00") == doctest::Approx(1.0));
  CHECK(get(m, "disp.diff_1.00") == doctest::Approx(0.0));
}

TEST_CASE("dispersion shrinks for a unimodal bowl") {
  Sample s = sphere_sample(300, 2, 2);
  FeatureMap m = ela_dispersion(s);
  CHECK(get(m, "disp.ratio_0.05") < 0.8);
  CHECK(get(m, "disp.diff_0.05") < 0.0);
  // keys use two decimals
  CHECK_NOTHROW(get(m, "disp.ratio_0.02"));
  CHECK_NOTHROW(get(m, "disp.ratio_0.25"));
}

TEST_CASE("dispersion input validation") {
  Sample s = sphere_sample(8, 2, 3);
  CHECK_THROWS_AS(ela_dispersion(s), std::invalid_argument);
  Sample multi = sphere_sample(40, 2, 4);
  multi.Y = Matrix::Ones(40, 2);
  CHECK_THROWS_AS(ela_dispersion(multi), std::invalid_argument);
  Sample tiny = sphere_sample(40, 2, 5);
  CHECK_THROWS_AS(ela_dispersion(tiny, {0.001}), std::invalid_argument);
}

TEST_CASE("y distribution moments") {
  Sample s;
  s.X = Matrix::Zero(4, 1);
  s.Y.resize(4, 1);
  s.Y << -1, 1, -2, 2;  // symmetric
  FeatureMap m = ela_ydist(s);
  CHECK(get(m, "ydist.skewness") == doctest::Approx(0.0));
  // two-point distribution at +-a has kurtosis 1, excess -2
  Sample b = s;
  b.Y << -1, -1, 1, 1;
  CHECK(get(ela_ydist(b), "ydist.kurtosis") == doctest::Approx(-2.0));
  // {0,0,0,1}: mean .25, m2 = 3/16; skew = m3/m2^1.5
  Sample c = s;
  c.Y << 0, 0, 0, 1;
  const double m2 = 3.0 / 16.0;
  const double m3 = (3 * std::pow(-0.25, 3) + std::pow(0.75, 3)) / 4.0;
  CHECK(get(ela_ydist(c), "ydist.skewness") ==
        doctest::Approx(m3 / std::pow(m2, 1.5)));
  Sample flat = s;
  flat.Y.setOnes();
  CHECK_THROWS_AS(ela_ydist(flat), std::invalid_argument);
}

TEST_CASE("meta model fits") {
  // exact linear target -> lin_r2 == 1, coefficient ratio 3
  Rng rng(6);
  Sample s;
  s.X = sampling::uniform_sample(Box::cube(2, -5, 5), 60, rng);
  s.Y = (3.0 * s.X.col(0) - 1.0 * s.X.col(1)).eval();
  FeatureMap m = ela_meta(s);
  CHECK(get(m, "meta.lin_r2") == doctest::Approx(1.0));
  CHECK(get(m, "meta.lin_coef_ratio") == doctest::Approx(3.0));

  // sphere: quadratic model is exact, linear is poor
  Sample q = sphere_sample(200, 2, 7);
  FeatureMap mq = ela_meta(q);
  CHECK(get(mq, "meta.quad_r2") == doctest::Approx(1.0));
  CHECK(get(mq, "meta.lin_r2") < 0.5);
  CHECK(get(mq, "meta.quad_coef_ratio") == doctest::Approx(1.0));

  Sample small = sphere_sample(6, 2, 8);
  CHECK_THROWS_AS(ela_meta(small), std::invalid_argument);
}

TEST_CASE("fitness-distance correlation") {
  // on the line y = distance from origin, correlation is exactly 1
  Sample s;
  s.X.resize(5, 1);
  s.X << 0, 1, 2, 3, 4;
  s.Y = s.X;
  CHECK(ela_fdc(s) == doctest::Approx(1.0));
  // deceptive landscape: y falls off with distance from the best point
  Sample r;
  r.X.resize(6, 1);
  r.X << 0, 1, 2, 3, 4, 5;
  r.Y.resize(6, 1);
  r.Y << 0, 5, 4, 3, 2, 1;
  CHECK(ela_fdc(r) < 0.0);
  Sample tiny;
  tiny.X = Matrix::Zero(2, 1);
  tiny.Y = Matrix::Ones(2, 1);
  CHECK_THROWS_AS(ela_fdc(tiny), std::invalid_argument);
}

TEST_CASE("nearest-better statistics on a monotone line") {
  Sample s;
  s.X.resize(5, 1);
  s.X << 0, 1, 2, 3, 4;
  s.Y = s.X;
  FeatureMap m = ela_nbc(s);
  // every nearest neighbor is also the nearest better one except at the best
  // point, whose nb distance is imputed at max nn = 1
  CHECK(get(m, "nbc.nn_nb_mean_ratio") == doctest::Approx(1.0));
  CHECK(get(m, "nbc.nn_nb_sd_ratio") == doctest::Approx(1.0));

  Sample flat = s;
  flat.Y.setOnes();
  CHECK_THROWS_AS(ela_nbc(flat), std::invalid_argument);
}

TEST_CASE("all features and names are consistent") {
  Sample s = sphere_sample(120, 3, 9);
  FeatureMap m = all_features(s);
  auto names = feature_names(3);
  REQUIRE(m.size() == names.size());
  for (std::size_t i = 0; i < names.size(); ++i) CHECK(m[i].first == names[i]);
  for (const auto& [k, v] : m) CHECK(std::isfinite(v));
}

TEST_CASE("snr fixtures") {
  Matrix f(4, 3);
  f.col(0).setConstant(5.0);            // constant -> imputed
  f.col(1) << 1, 3, 1, 3;               // mu 2, sigma 1 -> 4
  f.col(2) << -1, 1, -1, 1;             // mu 0 -> 0
  Vector v = snr(f);
  CHECK(v[0] == 1e12);
  CHECK(v[1] == doctest::Approx(4.0));
  CHECK(v[2] == doctest::Approx(0.0));
  CHECK_THROWS_AS(snr(Matrix::Ones(1, 2)), std::invalid_argument);
}

TEST_CASE("correlation report") {
  Rng rng(10);
  Matrix g(50, 3);
  for (int i = 0; i < 50; ++i) {
    g(i, 0) = rng.gauss();
    g(i, 1) = g(i, 0);        // duplicate -> correlation 1
    g(i, 2) = rng.gauss();    // independent
  }
  CorrReport rep = corr_report({g});
  CHECK(rep.groups_used == 1);
  CHECK(rep.mean_abs_corr(0, 0) == doctest::Approx(1.0));
  CHECK(rep.mean_abs_corr(0, 1) == doctest::Approx(1.0));
  CHECK(rep.mean_abs_corr(0, 2) < 0.5);

  // degenerate groups are skipped, not averaged
  Matrix flat = Matrix::Ones(10, 3);
  Matrix small = g.topRows(2);
  CorrReport rep2 = corr_report({g, flat, small});
  CHECK(rep2.groups_used == 1);
  CHECK(rep2.groups_skipped == 2);
  CHECK_THROWS_AS(corr_report({flat}), std::invalid_argument);
  CHECK_THROWS_AS(corr_report(std::vector<Matrix>{}), std::invalid_argument);
}

TEST_CASE("ppm rendering") {
  Matrix m(2, 3);
  m << 0, 0.5, 1, 0.25, 0.75, 1;
  std::string ppm = render_ppm(m, 4);
  CHECK(ppm.rfind("P6\n12 8\n255\n", 0) == 0);
  CHECK(ppm.size() == 12 + 12 * 8 * 3);
  // v = 0 renders blue, v = 1 renders red
  const std::size_t off = 12;
  CHECK(static_cast<unsigned char>(ppm[off + 0]) == 0);
  CHECK(static_cast<unsigned char>(ppm[off + 2]) == 255);
  const std::size_t red = off + 3 * 11;  // last pixel of the first row
  CHECK(static_cast<unsigned char>(ppm[red + 0]) == 255);
  CHECK(static_cast<unsigned char>(ppm[red + 2]) == 0);
}
