#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "dela/benchmarks.hpp"
#include "dela/model.hpp"
#include "dela/rng.hpp"
#include "dela/types.hpp"

namespace dela::downstream {

struct InstanceKey {
  int fid = 0;             // 0 for ZDT suites
  std::string suite;       // empty for single-objective fids
  std::uint64_t instance_seed = 0;
  int dim = 0;
  int repetition = 0;

  std::string str() const;
  bool operator==(const InstanceKey&) const = default;
};

struct FeatureRow {
  InstanceKey key;
  Vector features;
  std::string source;  // "deep" | "ela"
};

struct FeatureDataset {
  std::vector<FeatureRow> rows;
  std::vector<std::string> feature_names;
  std::vector<std::string> skipped;  // dimensional violations etc.
};

struct PerfRecord {
  std::string instance_key;
  std::string algorithm;
  int repetition = 0;
  double value = 0;
};

struct PerfTable {
  std::string metric;  // "ert" | "hv"
  std::vector<PerfRecord> records;
};

// ------------------------------------------------------------- extraction

/// Deep features for one problem: sample multiplier*d points, tokenize,
/// forward through the backbone. Deterministic given the rng state.
Vector deep_features(const model::BackboneParams<double>& params,
                     const model::BackboneConfig& cfg,
                     const randgen::ProblemInstance& inst, int multiplier, Rng& rng);

/// Deep features over the benchmark suite grid. Combinations whose dimension
/// exceeds nu are skipped and reported in `skipped`.
FeatureDataset extract_features(const model::BackboneParams<double>& params,
                                const model::BackboneConfig& cfg,
                                const std::vector<int>& fids,
                                const std::vector<int>& dims,
                                std::uint64_t seed_lo, std::uint64_t seed_hi,
                                int multiplier, int repetitions, std::uint64_t seed);

/// Classical ELA features over the same grid (single-objective only).
FeatureDataset extract_ela_features(const std::vector<int>& fids,
                                    const std::vector<int>& dims,
                                    std::uint64_t seed_lo, std::uint64_t seed_hi,
                                    int multiplier, int repetitions,
                                    std::uint64_t seed);

// ----------------------------------------------------------- classification

/// Euclidean k-nearest-neighbor majority vote. Vote ties break to the class
/// with the smaller summed neighbor distance, then lexicographic label.
std::vector<std::string> knn_classify(const std::vector<Vector>& train_x,
                                      const std::vector<std::string>& train_y,
                                      const std::vector<Vector>& test_x, int k);

/// Unweighted mean of per-class F1 over classes present in `labels`;
/// zero-division F1 counts as 0.
double macro_f1(const std::vector<std::string>& predictions,
                const std::vector<std::string>& labels);

struct HlpResult {
  std::string property;  // multimodality | global_structure | funnel
  int dim = 0;
  double f1 = 0;
};

/// One classifier per high-level property, trained on instance seeds in
/// [train_lo, train_hi] and evaluated on [test_lo, test_hi], per dimension.
std::vector<HlpResult> hlp_experiment(const FeatureDataset& features,
                                      std::uint64_t train_lo, std::uint64_t train_hi,
                                      std::uint64_t test_lo, std::uint64_t test_hi,
                                      int k);

// ----------------------------------------------------------------- metrics

/// Minimization; true iff a <= b elementwise with at least one strict <.
bool pareto_dominates(const Vector& a, const Vector& b);

/// Row indices of non-dominated points; duplicates kept once (first index).
std::vector<int> pareto_front(const Matrix& points);

/// Rectangle-sweep hypervolume for m = 2 minimization fronts. Dominated and
/// duplicate points are filtered; every remaining point must dominate ref.
double hypervolume_2d(const Matrix& front, const Vector& ref);

/// (ert + sample_cost) / ert_vbs; the VBS denominator carries no cost.
double relert(double ert, double sample_cost, double ert_vbs);

/// (hv - hv_sbs + 1e-8) / (hv_vbs - hv_sbs + 1e-8); requires hv_vbs >= hv_sbs.
double relhv(double hv, double hv_sbs, double hv_vbs);

struct AasConfig {
  int k = 5;
  double sample_cost = 0;  // evaluations charged to the selector (relERT only)
};

struct AasReport {
  std::string metric;
  std::string sbs_name;
  double selector_mean = 0;
  double sbs_mean = 0;
  double vbs_mean = 0;
  int n_test = 0;
};

/// Per-instance best-algorithm labels on the train split, kNN selection on
/// the test split, scored as mean relERT (metric "ert") or mean relHV ("hv").
AasReport aas_experiment(const FeatureDataset& features, const PerfTable& perf,
                         const std::vector<std::string>& train_keys,
                         const std::vector<std::string>& test_keys,
                         const AasConfig& cfg);

// --------------------------------------------------------------------- io

std::string feature_csv(const FeatureDataset& ds);
FeatureDataset parse_feature_csv(std::istream& is);
PerfTable parse_perf_csv(std::istream& is);
std::string perf_csv(const PerfTable& t);

}  // namespace dela::downstream
