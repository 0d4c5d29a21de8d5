#pragma once

#include "dela/types.hpp"

namespace dela::tokenizer {

/// Token matrix plus the layout metadata needed to interpret it.
struct TokenSet {
  Matrix tokens;  // n_t x (2 * k * nu)
  int d = 0;
  int m = 0;
  int k = 0;
  int nu = 0;
  int stride = 1;
  int n_original = 0;
};

/// Column-wise z-standardization with population std. Columns whose std is
/// below 1e-8 map to all zeros. Requires n >= 2.
Matrix standardize(const Matrix& m);

/// Row layout (x_1..x_d, 0.., y_1..y_m, 0..): decision block then objective
/// block, each padded to nu columns. Requires d <= nu and m <= nu.
Matrix pad_and_concat(const Matrix& xs, const Matrix& ys, int nu);

/// For every point, appends its k-1 nearest neighbors (Euclidean distance
/// over the first nu columns, ties to the smaller index) as centered offsets
/// spanning all 2*nu columns. Requires n >= k.
TokenSet knn_embed(const Matrix& t, int k, int d, int m, int nu);

/// Keeps tokens with index == 0 (mod s); applied after the embedding so
/// dropped points still appear as neighbors.
TokenSet apply_stride(const TokenSet& ts, int s);

/// standardize -> pad_and_concat -> knn_embed -> apply_stride.
TokenSet tokenize(const Sample& sample, int k, int nu, int stride);

}  // namespace dela::tokenizer
