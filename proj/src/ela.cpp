#include "dela/ela.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

namespace dela::ela {

namespace {

double pearson(const Vector& a, const Vector& b) {
  const double ma = a.mean(), mb = b.mean();
  Vector da = a.array() - ma, db = b.array() - mb;
  const double sa = da.norm(), sb = db.norm();
  if (sa < 1e-300 || sb < 1e-300)
    throw std::invalid_argument("pearson: zero variance");
  return da.dot(db) / (sa * sb);
}

double mean_pairwise_dist(const Matrix& x, const std::vector<int>& idx) {
  const int n = static_cast<int>(idx.size());
  double total = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      total += (x.row(idx[i]) - x.row(idx[j])).norm();
  return total / (n * (n - 1) / 2.0);
}

std::string frac_key(double q) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", q);
  return buf;
}

int best_index(const Vector& y) {
  int best = 0;
  for (int i = 1; i < y.size(); ++i)
    if (y[i] < y[best]) best = i;
  return best;
}

}  // namespace

FeatureMap ela_dispersion(const Sample& sample, const std::vector<double>& fractions) {
  if (sample.m() != 1)
    throw std::invalid_argument("ela_dispersion: single-objective samples only");
  const int n = sample.n();
  if (n < 10) throw std::invalid_argument("ela_dispersion: need n >= 10");
  Vector y = sample.Y.col(0);
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return y[a] != y[b] ? y[a] < y[b] : a < b; });
  std::vector<int> all(n);
  std::iota(all.begin(), all.end(), 0);
  const double d_all = mean_pairwise_dist(sample.X, all);

  FeatureMap out;
  for (double q : fractions) {
    const int sel = static_cast<int>(std::ceil(q * n));
    if (sel < 2)
      throw std::invalid_argument("ela_dispersion: fraction selects < 2 points");
    std::vector<int> top(order.begin(), order.begin() + sel);
    const double d_best = mean_pairwise_dist(sample.X, top);
    out.emplace_back("disp.ratio_" + frac_key(q), d_best / d_all);
    out.emplace_back("disp.diff_" + frac_key(q), d_best - d_all);
  }
  return out;
}

FeatureMap ela_ydist(const Sample& sample) {
  if (sample.m() != 1)
    throw std::invalid_argument("ela_ydist: single-objective samples only");
  const int n = sample.n();
  if (n < 4) throw std::invalid_argument("ela_ydist: need n >= 4");
  Vector y = sample.Y.col(0);
  const double mu = y.mean();
  Eigen::ArrayXd c = y.array() - mu;
  const double m2 = c.square().mean();
  if (m2 < 1e-300) throw std::invalid_argument("ela_ydist: zero variance");
  const double m3 = c.cube().mean();
  const double m4 = c.square().square().mean();
  return {{"ydist.skewness", m3 / std::pow(m2, 1.5)},
          {"ydist.kurtosis", m4 / (m2 * m2) - 3.0}};
}

FeatureMap ela_meta(const Sample& sample) {
  if (sample.m() != 1)
    throw std::invalid_argument("ela_meta: single-objective samples only");
  const int n = sample.n(), d = sample.d();
  if (n <= d * (d + 3) / 2 + 1)
    throw std::invalid_argument("ela_meta: need n > d(d+3)/2 + 1");
  Vector y = sample.Y.col(0);

  auto fit = [&](const Matrix& design, int n_pred) {
    Eigen::ColPivHouseholderQR<Matrix> qr(design);
    if (qr.rank() < design.cols())
      throw std::invalid_argument("ela_meta: singular design matrix");
    Vector coef = qr.solve(y);
    Vector resid = y - design * coef;
    const double ss_res = resid.squaredNorm();
    const double ss_tot = (y.array() - y.mean()).square().sum();
    if (ss_tot < 1e-300) throw std::invalid_argument("ela_meta: zero variance");
    const double r2 = 1.0 - ss_res / ss_tot;
    const double adj = 1.0 - (1.0 - r2) * (n - 1.0) / (n - n_pred - 1.0);
    return std::make_pair(adj, coef);
  };

  Matrix lin(n, d + 1);
  lin.col(0).setOnes();
  lin.rightCols(d) = sample.X;
  auto [lin_r2, lin_coef] = fit(lin, d);
  Vector la = lin_coef.tail(d).cwiseAbs();
  const double lin_ratio = la.maxCoeff() / std::max(la.minCoeff(), 1e-300);

  Matrix quad(n, 2 * d + 1);
  quad.leftCols(d + 1) = lin;
  quad.rightCols(d) = sample.X.array().square();
  auto [quad_r2, quad_coef] = fit(quad, 2 * d);
  Vector qa = quad_coef.tail(d).cwiseAbs();
  const double quad_ratio = qa.maxCoeff() / std::max(qa.minCoeff(), 1e-300);

  return {{"meta.lin_r2", lin_r2},
          {"meta.quad_r2", quad_r2},
          {"meta.lin_coef_ratio", lin_ratio},
          {"meta.quad_coef_ratio", quad_ratio}};
}

double ela_fdc(const Sample& sample) {
  if (sample.m() != 1)
    throw std::invalid_argument("ela_fdc: single-objective samples only");
  const int n = sample.n();
  if (n < 3) throw std::invalid_argument("ela_fdc: need n >= 3");
  Vector y = sample.Y.col(0);
  const int best = best_index(y);
  Vector dy = y.array() - y[best];
  Vector dist(n);
  for (int i = 0; i < n; ++i)
    dist[i] = (sample.X.row(i) - sample.X.row(best)).norm();
  return pearson(dy, dist);
}

FeatureMap ela_nbc(const Sample& sample) {
  if (sample.m() != 1)
    throw std::invalid_argument("ela_nbc: single-objective samples only");
  const int n = sample.n();
  if (n < 3) throw std::invalid_argument("ela_nbc: need n >= 3");
  Vector y = sample.Y.col(0);
  if ((y.array() == y[0]).all())
    throw std::invalid_argument("ela_nbc: all objective values equal");

  Vector nn(n), nb(n);
  for (int i = 0; i < n; ++i) {
    double dnn = std::numeric_limits<double>::infinity();
    double dnb = std::numeric_limits<double>::infinity();
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      const double dij = (sample.X.row(i) - sample.X.row(j)).norm();
      dnn = std::min(dnn, dij);
      if (y[j] < y[i]) dnb = std::min(dnb, dij);
    }
    nn[i] = dnn;
    nb[i] = dnb;
  }
  const double max_nn = nn.maxCoeff();
  for (int i = 0; i < n; ++i)
    if (!std::isfinite(nb[i])) nb[i] = max_nn;

  const double mean_nn = nn.mean(), mean_nb = nb.mean();
  const double sd_nn = std::sqrt((nn.array() - mean_nn).square().mean());
  const double sd_nb = std::sqrt((nb.array() - mean_nb).square().mean());
  double sd_ratio;
  if (sd_nb < 1e-300)
    sd_ratio = sd_nn < 1e-300 ? 1.0 : std::numeric_limits<double>::infinity();
  else
    sd_ratio = sd_nn / sd_nb;
  double cor = 0;
  if (sd_nn >= 1e-300 && sd_nb >= 1e-300) cor = pearson(nn, nb);
  return {{"nbc.nn_nb_mean_ratio", mean_nn / mean_nb},
          {"nbc.nn_nb_sd_ratio", sd_ratio},
          {"nbc.nb_cor", cor}};
}

FeatureMap all_features(const Sample& sample) {
  FeatureMap out = ela_dispersion(sample);
  for (auto& kv : ela_ydist(sample)) out.push_back(kv);
  for (auto& kv : ela_meta(sample)) out.push_back(kv);
  out.emplace_back("fdc", ela_fdc(sample));
  for (auto& kv : ela_nbc(sample)) out.push_back(kv);
  return out;
}

std::vector<std::string> feature_names(int d) {
  Sample s;
  s.X = Matrix::Random(std::max(100, d * (d + 3) / 2 + 2), d);
  s.Y = s.X.rowwise().squaredNorm();
  std::vector<std::string> names;
  for (auto& kv : all_features(s)) names.push_back(kv.first);
  return names;
}

Vector snr(const Matrix& features) {
  if (features.rows() < 2) throw std::invalid_argument("snr: need >= 2 rows");
  Vector out(features.cols());
  for (int j = 0; j < features.cols(); ++j) {
    const double mu = features.col(j).mean();
    const double sigma = std::sqrt((features.col(j).array() - mu).square().mean());
    out[j] = sigma < 1e-12 ? 1e12 : (mu * mu) / (sigma * sigma);
  }
  return out;
}

CorrReport corr_report(const std::vector<Matrix>& groups) {
  if (groups.empty()) throw std::invalid_argument("corr_report: no groups");
  const int p = static_cast<int>(groups.front().cols());
  if (p < 2) throw std::invalid_argument("corr_report: need >= 2 features");
  CorrReport rep;
  rep.mean_abs_corr = Matrix::Zero(p, p);
  for (const Matrix& g : groups) {
    if (g.cols() != p) throw std::invalid_argument("corr_report: column mismatch");
    bool degenerate = g.rows() < 3;
    Vector sd(p), mu(p);
    if (!degenerate) {
      for (int j = 0; j < p; ++j) {
        mu[j] = g.col(j).mean();
        sd[j] = std::sqrt((g.col(j).array() - mu[j]).square().mean());
        if (sd[j] < 1e-300) degenerate = true;
      }
    }
    if (degenerate) {
      rep.groups_skipped += 1;
      continue;
    }
    Matrix c(p, p);
    for (int a = 0; a < p; ++a)
      for (int b = a; b < p; ++b) {
        const double cov =
            ((g.col(a).array() - mu[a]) * (g.col(b).array() - mu[b])).mean();
        c(a, b) = c(b, a) = std::abs(cov / (sd[a] * sd[b]));
      }
    rep.mean_abs_corr += c;
    rep.groups_used += 1;
  }
  if (rep.groups_used == 0)
    throw std::invalid_argument("corr_report: all groups degenerate");
  rep.mean_abs_corr /= rep.groups_used;
  return rep;
}

std::string render_ppm(const Matrix& m, int cell_px) {
  const int rows = static_cast<int>(m.rows()), cols = static_cast<int>(m.cols());
  const int w = cols * cell_px, h = rows * cell_px;
  std::string out = "P6\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
  out.reserve(out.size() + static_cast<std::size_t>(w) * h * 3);
  for (int py = 0; py < h; ++py)
    for (int px = 0; px < w; ++px) {
      double v = std::clamp(m(py / cell_px, px / cell_px), 0.0, 1.0);
      // blue (0) -> white (0.5) -> red (1)
      double r = v <= 0.5 ? 2 * v : 1.0;
      double b = v <= 0.5 ? 1.0 : 2 * (1 - v);
      double g = v <= 0.5 ? 2 * v : 2 * (1 - v);
      out.push_back(static_cast<char>(static_cast<unsigned char>(r * 255)));
      out.push_back(static_cast<char>(static_cast<unsigned char>(g * 255)));
      out.push_back(static_cast<char>(static_cast<unsigned char>(b * 255)));
    }
  return out;
}

}  // namespace dela::ela
