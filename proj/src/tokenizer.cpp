#include "dela/tokenizer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace dela::tokenizer {

Matrix standardize(const Matrix& m) {
  if (m.rows() < 2) throw std::invalid_argument("standardize: need n >= 2");
  Matrix out(m.rows(), m.cols());
  for (int j = 0; j < m.cols(); ++j) {
    double mean = m.col(j).mean();
    double std = std::sqrt((m.col(j).array() - mean).square().mean());
    if (std > 1e-8)
      out.col(j) = (m.col(j).array() - mean) / std;
    else
      out.col(j).setZero();
  }
  return out;
}

Matrix pad_and_concat(const Matrix& xs, const Matrix& ys, int nu) {
  const int d = static_cast<int>(xs.cols());
  const int m = static_cast<int>(ys.cols());
  if (xs.rows() != ys.rows())
    throw std::invalid_argument("pad_and_concat: row count mismatch");
  if (d > nu || m > nu)
    throw std::invalid_argument("pad_and_concat: d or m exceeds nu");
  Matrix out = Matrix::Zero(xs.rows(), 2 * nu);
  out.leftCols(d) = xs;
  out.middleCols(nu, m) = ys;
  return out;
}

TokenSet knn_embed(const Matrix& t, int k, int d, int m, int nu) {
  const int n = static_cast<int>(t.rows());
  if (k < 1) throw std::invalid_argument("knn_embed: k must be >= 1");
  if (n < k) throw std::invalid_argument("knn_embed: need n >= k");

  TokenSet ts;
  ts.d = d;
  ts.m = m;
  ts.k = k;
  ts.nu = nu;
  ts.stride = 1;
  ts.n_original = n;
  ts.tokens.resize(n, 2 * k * nu);

  // Neighbor metric: Euclidean distance over the decision block only.
  const auto dec = t.leftCols(nu);
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) {
    std::iota(order.begin(), order.end(), 0);
    Vector dist(n);
    for (int j = 0; j < n; ++j)
      dist[j] = (dec.row(j) - dec.row(i)).squaredNorm();
    dist[i] = -1.0;  // self sorts first, dropped below
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      return dist[a] != dist[b] ? dist[a] < dist[b] : a < b;
    });
    ts.tokens.block(i, 0, 1, 2 * nu) = t.row(i);
    for (int q = 1; q < k; ++q)
      ts.tokens.block(i, 2 * nu * q, 1, 2 * nu) = t.row(order[q]) - t.row(i);
  }
  return ts;
}

TokenSet apply_stride(const TokenSet& ts, int s) {
  if (s < 1) throw std::invalid_argument("apply_stride: s must be >= 1");
  if (s == 1) {
    TokenSet out = ts;
    out.stride = 1;
    return out;
  }
  const int n = static_cast<int>(ts.tokens.rows());
  const int kept = (n + s - 1) / s;
  TokenSet out = ts;
  out.stride = s;
  out.tokens.resize(kept, ts.tokens.cols());
  for (int i = 0; i < kept; ++i) out.tokens.row(i) = ts.tokens.row(i * s);
  return out;
}

TokenSet tokenize(const Sample& sample, int k, int nu, int stride) {
  Matrix xs = standardize(sample.X);
  Matrix ys = standardize(sample.Y);
  Matrix t = pad_and_concat(xs, ys, nu);
  TokenSet ts = knn_embed(t, k, sample.d(), sample.m(), nu);
  return apply_stride(ts, stride);
}

}  // namespace dela::tokenizer
