#pragma once

#include <array>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dela/rng.hpp"
#include "dela/types.hpp"

namespace dela::randgen {

enum class OpKind {
  // leaves (arity 0)
  Variable,
  Constant,
  // arity-0 operators (act on the whole decision vector or a single variable)
  LinearTerm,   // c * x_i
  SquaredTerm,  // x_i^2
  MeanRed,
  SumRed,
  MinRed,
  MaxRed,
  // unary
  Neg,
  Abs,
  Sin,
  Cos,
  Exp,   // exponent clamped to <= 50
  Log,   // ln(|a| + 1e-9)
  Sqrt,  // sqrt(|a|)
  Square,
  // binary
  Add,
  Sub,
  Mul,
  Div,  // a/b if |b| > 1e-9 else a
};

int arity(OpKind k);
bool is_leaf(OpKind k);  // Variable / Constant: not counted as operators

struct ExprNode {
  OpKind kind = OpKind::Constant;
  int var_index = -1;   // Variable, LinearTerm, SquaredTerm
  double value = 0.0;   // Constant payload, LinearTerm coefficient
  std::vector<ExprNode> children;
};

/// Number of operator nodes (everything except Variable/Constant leaves).
int count_ops(const ExprNode& tree);

/// Relative draw weights for the operator pool. Linear/square/add carry more
/// weight than exp/log to keep the objective-value skewness and kurtosis of
/// the generated corpus close to the benchmark suite.
struct OpWeights {
  double add = 3.0, sub = 2.0, mul = 2.5, div = 1.0;
  double neg = 1.0, abs = 1.0, sin = 1.0, cos = 1.0;
  double exp = 0.4, log = 0.4, sqrt = 1.0, square = 2.0;
  double mean = 0.7, sum = 0.7, min = 0.5, max = 0.5;
  double linear = 3.0, squared = 2.5;
};

struct GeneratorConfig {
  int d = 2;
  int op_lower = 4;
  int op_upper = 32;
  std::uint64_t seed = 0;
  double value_cap = 1e7;
  double min_std = 0.1;
  int probe_size = 0;  // 0 -> 50 * d
  double box_lo = -5.0;
  double box_hi = 5.0;
  OpWeights weights;

  int effective_probe_size() const { return probe_size > 0 ? probe_size : 50 * d; }
  bool valid() const {
    return d >= 1 && op_lower >= 1 && op_lower <= op_upper && min_std > 0 &&
           value_cap > 0 && box_lo < box_hi;
  }
};

/// One objective: either a generated expression tree or an analytic function.
struct Objective {
  std::optional<ExprNode> tree;
  std::function<double(const Eigen::Ref<const Vector>&)> fn;

  /// Evaluates on all rows of X; nullopt if any output is non-finite.
  std::optional<Vector> evaluate(const Matrix& x) const;
};

struct ProblemInstance {
  std::vector<Objective> objectives;
  Box bounds;
  int d = 0;
  int m = 0;
  std::string origin;  // "random" or benchmark tag

  /// n x m objective matrix; nullopt on any non-finite value.
  std::optional<Matrix> evaluate(const Matrix& x) const;
};

ExprNode generate_tree(const GeneratorConfig& config, Rng& rng);

/// Evaluates a tree on all rows of X with protected operator semantics.
/// Non-finite output (overflow despite guards) yields nullopt.
std::optional<Vector> evaluate_tree(const ExprNode& tree, const Matrix& x);

/// Draws a uniform probe and checks the three filter conditions:
/// finite outputs, population std >= min_std, |y| <= value_cap.
bool accept_instance(const ProblemInstance& instance, const GeneratorConfig& config,
                     Rng& rng);

struct RetryBudgetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GenStats {
  long long attempts = 0;
  long long accepted = 0;
  std::map<std::string, long long> op_histogram;  // accepted trees only

  double acceptance_rate() const {
    return attempts > 0 ? static_cast<double>(accepted) / attempts : 0.0;
  }
};

/// Generates m independently filtered single-objective trees and combines
/// them. Throws RetryBudgetError after 1000 rejected trees per objective.
ProblemInstance generate_instance(int d, int m, const GeneratorConfig& config, Rng& rng,
                                  GenStats* stats = nullptr);

/// Operator-name histogram of one tree (leaves excluded).
void op_histogram(const ExprNode& tree, std::map<std::string, long long>& out);

// --- serialization: line-oriented prefix notation, one instance per line ---

std::string serialize_tree(const ExprNode& tree);
ExprNode parse_tree(const std::string& text);

std::string serialize_instance(const ProblemInstance& instance);
ProblemInstance parse_instance(const std::string& line);

}  // namespace dela::randgen
