#pragma once

#include <string>
#include <utility>
#include <vector>

#include "dela/types.hpp"

namespace dela::ela {

/// Ordered (name, value) pairs; order is stable across runs.
using FeatureMap = std::vector<std::pair<std::string, double>>;

/// Dispersion of the best ceil(q*n) points vs the full sample: ratio and
/// difference of mean pairwise decision-space distances, per fraction.
/// Requires a single-objective sample with n >= 10.
FeatureMap ela_dispersion(const Sample& sample,
                          const std::vector<double>& fractions = {0.02, 0.05, 0.1,
                                                                  0.25});

/// Sample skewness and excess kurtosis of Y. Requires n >= 4 and nonzero
/// variance.
FeatureMap ela_ydist(const Sample& sample);

/// Adjusted R^2 of linear and diagonal-quadratic least-squares models plus
/// max/min absolute coefficient ratios. Requires n > d(d+3)/2 + 1.
FeatureMap ela_meta(const Sample& sample);

/// Fitness-distance correlation: Pearson correlation between y - y_best and
/// distance to the sample-best point (ties to lowest index). n >= 3.
double ela_fdc(const Sample& sample);

/// Nearest-neighbor vs nearest-better-neighbor statistics; the best point's
/// NB distance is the sample's maximum NN distance. n >= 3, single objective.
FeatureMap ela_nbc(const Sample& sample);

/// All baseline groups concatenated (dispersion, ydist, meta, fdc, nbc).
FeatureMap all_features(const Sample& sample);

std::vector<std::string> feature_names(int d);

/// Per-column signal-to-noise ratio mu^2/sigma^2 over rows; columns with
/// sigma < 1e-12 are imputed at 1e12.
Vector snr(const Matrix& features);

struct CorrReport {
  Matrix mean_abs_corr;  // p x p, entries in [0, 1]
  int groups_used = 0;
  int groups_skipped = 0;
};

/// Mean over groups of the absolute Pearson correlation matrix. Groups with
/// fewer than 3 rows or any constant column are skipped.
CorrReport corr_report(const std::vector<Matrix>& groups);

/// Grayscale heat map of a matrix with entries in [0, 1], binary PPM.
std::string render_ppm(const Matrix& m, int cell_px = 16);

}  // namespace dela::ela
