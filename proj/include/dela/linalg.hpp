#pragma once

#include "dela/rng.hpp"
#include "dela/types.hpp"

namespace dela {

/// Random orthogonal matrix: QR decomposition of a seeded Gaussian matrix,
/// with column signs fixed so the factorization is unique.
inline Matrix random_rotation(int d, Rng& rng) {
  Matrix g(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) g(i, j) = rng.gauss();
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < d; ++j)
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  return q;
}

}  // namespace dela
