#pragma once

#include <string>

#include "dela/randgen.hpp"
#include "dela/rng.hpp"
#include "dela/types.hpp"

namespace dela::benchmarks {

using randgen::ProblemInstance;

/// High-level property labels of the 24 single-objective functions.
struct HLPLabel {
  enum class Multimodality { none, low, med, high };
  enum class GlobalStructure { none, weak, med, strong, deceptive };
  enum class Funnel { yes, none };

  Multimodality multimodality;
  GlobalStructure global_structure;
  Funnel funnel;

  bool operator==(const HLPLabel&) const = default;
};

std::string to_string(HLPLabel::Multimodality v);
std::string to_string(HLPLabel::GlobalStructure v);
std::string to_string(HLPLabel::Funnel v);

/// Label row for fid in 1..24; throws on out-of-range fid.
HLPLabel hlp_labels(int fid);

const char* function_name(int fid);

struct BenchmarkId {
  int fid = 0;           // 1..24 single-objective; 0 for ZDT suites
  std::string suite;     // "zdt1" | "zdt2" | "zdt3" when fid == 0
  std::uint64_t instance_seed = 0;
};

/// A benchmark problem plus its known optimum under the instance transform.
struct BenchmarkInstance {
  ProblemInstance problem;
  Vector x_opt;      // empty when the family has no tracked optimum point
  double f_opt = 0;  // objective offset; problem evaluates to f_opt at x_opt
};

/// Builds the function family with a seeded instance transformation
/// (orthogonal rotation + shift + objective offset). instance_seed == 0
/// yields the identity transform with zero shift and offset.
/// Single-objective families accept d in {2, 3, 5, 10}; ZDT is fixed to
/// d = 2, m = 2 on the same [-5, 5] box.
BenchmarkInstance make_benchmark(const BenchmarkId& id, int d);

/// Suite listing CSV: fid, name, multimodality, global_structure, funnel.
std::string suite_csv();

}  // namespace dela::benchmarks
