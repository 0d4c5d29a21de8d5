#pragma once

#include "dela/rng.hpp"
#include "dela/types.hpp"

namespace dela::sampling {

/// i.i.d. uniform design of n points within the box. Throws on an empty box.
Matrix uniform_sample(const Box& bounds, int n, Rng& rng);

/// Latin Hypercube design: each dimension is split into n equal bins,
/// every bin receives exactly one point, jittered uniformly inside the bin.
Matrix lhs_sample(const Box& bounds, int n, Rng& rng);

inline int sample_size(int d, int multiplier) { return multiplier * d; }

}  // namespace dela::sampling
