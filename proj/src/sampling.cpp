#include "dela/sampling.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

namespace dela::sampling {

namespace {
void check_box(const Box& bounds, int n) {
  if (n < 1) throw std::invalid_argument("sampling: n must be >= 1");
  if (!bounds.valid()) throw std::invalid_argument("sampling: empty box (lo >= hi)");
}
}  // namespace

Matrix uniform_sample(const Box& bounds, int n, Rng& rng) {
  check_box(bounds, n);
  const int d = bounds.dim();
  Matrix x(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) x(i, j) = rng.uniform(bounds.lo[j], bounds.hi[j]);
  return x;
}

Matrix lhs_sample(const Box& bounds, int n, Rng& rng) {
  check_box(bounds, n);
  const int d = bounds.dim();
  Matrix x(n, d);
  std::vector<int> perm(n);
  for (int j = 0; j < d; ++j) {
    std::iota(perm.begin(), perm.end(), 0);
    // Fisher-Yates with our own stream for reproducibility.
    for (int i = n - 1; i > 0; --i) {
      int k = rng.uniform_int(0, i);
      std::swap(perm[i], perm[k]);
    }
    const double w = (bounds.hi[j] - bounds.lo[j]) / n;
    for (int i = 0; i < n; ++i)
      x(i, j) = bounds.lo[j] + (perm[i] + rng.uniform01()) * w;
  }
  return x;
}

}  // namespace dela::sampling
