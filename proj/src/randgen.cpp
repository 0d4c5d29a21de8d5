#include "dela/randgen.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "dela/sampling.hpp"

namespace dela::randgen {

int arity(OpKind k) {
  switch (k) {
    case OpKind::Variable:
    case OpKind::Constant:
    case OpKind::LinearTerm:
    case OpKind::SquaredTerm:
    case OpKind::MeanRed:
    case OpKind::SumRed:
    case OpKind::MinRed:
    case OpKind::MaxRed:
      return 0;
    case OpKind::Neg:
    case OpKind::Abs:
    case OpKind::Sin:
    case OpKind::Cos:
    case OpKind::Exp:
    case OpKind::Log:
    case OpKind::Sqrt:
    case OpKind::Square:
      return 1;
    default:
      return 2;
  }
}

bool is_leaf(OpKind k) { return k == OpKind::Variable || k == OpKind::Constant; }

int count_ops(const ExprNode& tree) {
  int n = is_leaf(tree.kind) ? 0 : 1;
  for (const auto& c : tree.children) n += count_ops(c);
  return n;
}

// ---------------------------------------------------------------- evaluation

namespace {

Vector eval_rec(const ExprNode& node, const Matrix& x) {
  const int n = static_cast<int>(x.rows());
  switch (node.kind) {
    case OpKind::Variable:
      return x.col(node.var_index);
    case OpKind::Constant:
      return Vector::Constant(n, node.value);
    case OpKind::LinearTerm:
      return node.value * x.col(node.var_index);
    case OpKind::SquaredTerm:
      return x.col(node.var_index).array().square();
    case OpKind::MeanRed:
      return x.rowwise().mean();
    case OpKind::SumRed:
      return x.rowwise().sum();
    case OpKind::MinRed:
      return x.rowwise().minCoeff();
    case OpKind::MaxRed:
      return x.rowwise().maxCoeff();
    case OpKind::Neg:
      return -eval_rec(node.children[0], x);
    case OpKind::Abs:
      return eval_rec(node.children[0], x).cwiseAbs();
    case OpKind::Sin:
      return eval_rec(node.children[0], x).array().sin();
    case OpKind::Cos:
      return eval_rec(node.children[0], x).array().cos();
    case OpKind::Exp:
      return eval_rec(node.children[0], x).array().min(50.0).exp();
    case OpKind::Log:
      return (eval_rec(node.children[0], x).array().abs() + 1e-9).log();
    case OpKind::Sqrt:
      return eval_rec(node.children[0], x).array().abs().sqrt();
    case OpKind::Square:
      return eval_rec(node.children[0], x).array().square();
    case OpKind::Add:
      return eval_rec(node.children[0], x) + eval_rec(node.children[1], x);
    case OpKind::Sub:
      return eval_rec(node.children[0], x) - eval_rec(node.children[1], x);
    case OpKind::Mul:
      return eval_rec(node.children[0], x).cwiseProduct(eval_rec(node.children[1], x));
    case OpKind::Div: {
      Vector a = eval_rec(node.children[0], x);
      Vector b = eval_rec(node.children[1], x);
      Vector out(n);
      for (int i = 0; i < n; ++i) out[i] = std::abs(b[i]) > 1e-9 ? a[i] / b[i] : a[i];
      return out;
    }
  }
  return Vector::Zero(n);
}

}  // namespace

std::optional<Vector> evaluate_tree(const ExprNode& tree, const Matrix& x) {
  Vector y = eval_rec(tree, x);
  if (!y.allFinite()) return std::nullopt;
  return y;
}

std::optional<Vector> Objective::evaluate(const Matrix& x) const {
  if (tree) return evaluate_tree(*tree, x);
  Vector y(x.rows());
  for (int i = 0; i < x.rows(); ++i) y[i] = fn(x.row(i).transpose());
  if (!y.allFinite()) return std::nullopt;
  return y;
}

std::optional<Matrix> ProblemInstance::evaluate(const Matrix& x) const {
  Matrix y(x.rows(), m);
  for (int j = 0; j < m; ++j) {
    auto col = objectives[j].evaluate(x);
    if (!col) return std::nullopt;
    y.col(j) = *col;
  }
  return y;
}

// ---------------------------------------------------------------- generation

namespace {

struct PoolEntry {
  OpKind kind;
  double weight;
};

std::vector<PoolEntry> make_pool(const OpWeights& w) {
  return {
      {OpKind::Add, w.add},       {OpKind::Sub, w.sub},
      {OpKind::Mul, w.mul},       {OpKind::Div, w.div},
      {OpKind::Neg, w.neg},       {OpKind::Abs, w.abs},
      {OpKind::Sin, w.sin},       {OpKind::Cos, w.cos},
      {OpKind::Exp, w.exp},       {OpKind::Log, w.log},
      {OpKind::Sqrt, w.sqrt},     {OpKind::Square, w.square},
      {OpKind::MeanRed, w.mean},  {OpKind::SumRed, w.sum},
      {OpKind::MinRed, w.min},    {OpKind::MaxRed, w.max},
      {OpKind::LinearTerm, w.linear}, {OpKind::SquaredTerm, w.squared},
  };
}

OpKind draw_op(const std::vector<PoolEntry>& pool, bool allow_arity0, Rng& rng) {
  double total = 0;
  for (const auto& e : pool)
    if (allow_arity0 || arity(e.kind) > 0) total += e.weight;
  double u = rng.uniform(0.0, total);
  for (const auto& e : pool) {
    if (!allow_arity0 && arity(e.kind) == 0) continue;
    u -= e.weight;
    if (u <= 0) return e.kind;
  }
  return OpKind::Add;
}

ExprNode make_random_leaf(int d, Rng& rng) {
  ExprNode n;
  if (rng.uniform01() < 0.75) {
    n.kind = OpKind::Variable;
    n.var_index = rng.uniform_int(0, d - 1);
  } else {
    n.kind = OpKind::Constant;
    n.value = rng.uniform(-5.0, 5.0);
  }
  return n;
}

// Builds a subtree containing exactly `budget` operator nodes.
ExprNode build(int budget, const std::vector<PoolEntry>& pool, int d, Rng& rng) {
  if (budget <= 0) return make_random_leaf(d, rng);
  ExprNode node;
  node.kind = draw_op(pool, budget == 1, rng);
  switch (arity(node.kind)) {
    case 0:
      if (node.kind == OpKind::LinearTerm) {
        node.var_index = rng.uniform_int(0, d - 1);
        node.value = rng.uniform(-3.0, 3.0);
      } else if (node.kind == OpKind::SquaredTerm) {
        node.var_index = rng.uniform_int(0, d - 1);
      }
      break;
    case 1:
      node.children.push_back(build(budget - 1, pool, d, rng));
      break;
    case 2: {
      int left = rng.uniform_int(0, budget - 1);
      node.children.push_back(build(left, pool, d, rng));
      node.children.push_back(build(budget - 1 - left, pool, d, rng));
      break;
    }
  }
  return node;
}

}  // namespace

ExprNode generate_tree(const GeneratorConfig& config, Rng& rng) {
  if (!config.valid()) throw std::invalid_argument("generate_tree: invalid config");
  const auto pool = make_pool(config.weights);
  const int budget = rng.uniform_int(config.op_lower, config.op_upper);
  return build(budget, pool, config.d, rng);
}

bool accept_instance(const ProblemInstance& instance, const GeneratorConfig& config,
                     Rng& rng) {
  const int probe = config.effective_probe_size();
  if (probe < 2) throw std::invalid_argument("accept_instance: probe_size must be >= 2");
  Matrix x = sampling::uniform_sample(instance.bounds, probe, rng);
  for (const auto& obj : instance.objectives) {
    auto y = obj.evaluate(x);
    if (!y) return false;  // condition 1: finite scalars
    if (y->cwiseAbs().maxCoeff() > config.value_cap) return false;  // condition 3
    double mean = y->mean();
    double var = (y->array() - mean).square().mean();  // population variance
    if (std::sqrt(var) < config.min_std) return false;  // condition 2
  }
  return true;
}

namespace {
const char* op_name(OpKind k);
}

void op_histogram(const ExprNode& tree, std::map<std::string, long long>& out) {
  if (!is_leaf(tree.kind)) {
    switch (tree.kind) {
      case OpKind::LinearTerm: out["lin"] += 1; break;
      case OpKind::SquaredTerm: out["sq"] += 1; break;
      default: out[op_name(tree.kind)] += 1;
    }
  }
  for (const auto& c : tree.children) op_histogram(c, out);
}

ProblemInstance generate_instance(int d, int m, const GeneratorConfig& config, Rng& rng,
                                  GenStats* stats) {
  if (d < 1 || m < 1) throw std::invalid_argument("generate_instance: d, m must be >= 1");
  GeneratorConfig cfg = config;
  cfg.d = d;
  ProblemInstance inst;
  inst.bounds = Box::cube(d, cfg.box_lo, cfg.box_hi);
  inst.d = d;
  inst.m = m;
  inst.origin = "random";

  constexpr int kRetryBudget = 1000;
  for (int j = 0; j < m; ++j) {
    bool ok = false;
    for (int attempt = 0; attempt < kRetryBudget; ++attempt) {
      Objective obj;
      obj.tree = generate_tree(cfg, rng);
      ProblemInstance single{{obj}, inst.bounds, d, 1, "probe"};
      if (stats) stats->attempts += 1;
      if (accept_instance(single, cfg, rng)) {
        if (stats) {
          stats->accepted += 1;
          op_histogram(*obj.tree, stats->op_histogram);
        }
        inst.objectives.push_back(std::move(obj));
        ok = true;
        break;
      }
    }
    if (!ok)
      throw RetryBudgetError("generate_instance: retry budget exhausted for objective " +
                             std::to_string(j));
  }
  return inst;
}

// ------------------------------------------------------------- serialization

namespace {

const char* op_name(OpKind k) {
  switch (k) {
    case OpKind::MeanRed: return "mean";
    case OpKind::SumRed: return "sum";
    case OpKind::MinRed: return "vmin";
    case OpKind::MaxRed: return "vmax";
    case OpKind::Neg: return "neg";
    case OpKind::Abs: return "abs";
    case OpKind::Sin: return "sin";
    case OpKind::Cos: return "cos";
    case OpKind::Exp: return "exp";
    case OpKind::Log: return "log";
    case OpKind::Sqrt: return "sqrt";
    case OpKind::Square: return "square";
    case OpKind::Add: return "add";
    case OpKind::Sub: return "sub";
    case OpKind::Mul: return "mul";
    case OpKind::Div: return "div";
    default: return "?";
  }
}

std::string fmt_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void serialize_rec(const ExprNode& n, std::string& out) {
  if (!out.empty()) out += ' ';
  switch (n.kind) {
    case OpKind::Variable: out += "x" + std::to_string(n.var_index); break;
    case OpKind::Constant: out += "c:" + fmt_num(n.value); break;
    case OpKind::LinearTerm:
      out += "lin:" + std::to_string(n.var_index) + ":" + fmt_num(n.value);
      break;
    case OpKind::SquaredTerm: out += "sq:" + std::to_string(n.var_index); break;
    default: out += op_name(n.kind);
  }
  for (const auto& c : n.children) serialize_rec(c, out);
}

ExprNode parse_rec(std::istringstream& in) {
  std::string tok;
  if (!(in >> tok)) throw std::runtime_error("parse_tree: unexpected end of input");
  ExprNode n;
  if (tok[0] == 'x' && tok.size() > 1) {
    n.kind = OpKind::Variable;
    n.var_index = std::stoi(tok.substr(1));
    return n;
  }
  if (tok.rfind("c:", 0) == 0) {
    n.kind = OpKind::Constant;
    n.value = std::stod(tok.substr(2));
    return n;
  }
  if (tok.rfind("lin:", 0) == 0) {
    auto colon = tok.find(':', 4);
    n.kind = OpKind::LinearTerm;
    n.var_index = std::stoi(tok.substr(4, colon - 4));
    n.value = std::stod(tok.substr(colon + 1));
    return n;
  }
  if (tok.rfind("sq:", 0) == 0) {
    n.kind = OpKind::SquaredTerm;
    n.var_index = std::stoi(tok.substr(3));
    return n;
  }
  static const std::pair<const char*, OpKind> named[] = {
      {"mean", OpKind::MeanRed}, {"sum", OpKind::SumRed},   {"vmin", OpKind::MinRed},
      {"vmax", OpKind::MaxRed},  {"neg", OpKind::Neg},      {"abs", OpKind::Abs},
      {"sin", OpKind::Sin},      {"cos", OpKind::Cos},      {"exp", OpKind::Exp},
      {"log", OpKind::Log},      {"sqrt", OpKind::Sqrt},    {"square", OpKind::Square},
      {"add", OpKind::Add},      {"sub", OpKind::Sub},      {"mul", OpKind::Mul},
      {"div", OpKind::Div},
  };
  bool found = false;
  for (const auto& [name, kind] : named) {
    if (tok == name) {
      n.kind = kind;
      found = true;
      break;
    }
  }
  if (!found) throw std::runtime_error("parse_tree: unknown token '" + tok + "'");
  for (int i = 0; i < arity(n.kind); ++i) n.children.push_back(parse_rec(in));
  return n;
}

}  // namespace

std::string serialize_tree(const ExprNode& tree) {
  std::string out;
  serialize_rec(tree, out);
  return out;
}

ExprNode parse_tree(const std::string& text) {
  std::istringstream in(text);
  ExprNode n = parse_rec(in);
  std::string rest;
  if (in >> rest) throw std::runtime_error("parse_tree: trailing tokens");
  return n;
}

std::string serialize_instance(const ProblemInstance& instance) {
  std::string out = "d=" + std::to_string(instance.d) + " m=" + std::to_string(instance.m) +
                    " lo=" + fmt_num(instance.bounds.lo[0]) +
                    " hi=" + fmt_num(instance.bounds.hi[0]) + " origin=" + instance.origin;
  for (const auto& obj : instance.objectives) {
    if (!obj.tree)
      throw std::runtime_error("serialize_instance: analytic objectives not serializable");
    out += " | " + serialize_tree(*obj.tree);
  }
  return out;
}

ProblemInstance parse_instance(const std::string& line) {
  auto bar = line.find(" | ");
  if (bar == std::string::npos) throw std::runtime_error("parse_instance: malformed record");
  std::istringstream head(line.substr(0, bar));
  ProblemInstance inst;
  double lo = 0, hi = 0;
  std::string tok;
  while (head >> tok) {
    auto eq = tok.find('=');
    if (eq == std::string::npos) throw std::runtime_error("parse_instance: bad header token");
    std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
    if (key == "d") inst.d = std::stoi(val);
    else if (key == "m") inst.m = std::stoi(val);
    else if (key == "lo") lo = std::stod(val);
    else if (key == "hi") hi = std::stod(val);
    else if (key == "origin") inst.origin = val;
    else throw std::runtime_error("parse_instance: unknown header key " + key);
  }
  inst.bounds = Box::cube(inst.d, lo, hi);
  std::string rest = line.substr(bar + 3);
  size_t pos = 0;
  while (true) {
    auto next = rest.find(" | ", pos);
    std::string part = rest.substr(pos, next == std::string::npos ? next : next - pos);
    Objective obj;
    obj.tree = parse_tree(part);
    inst.objectives.push_back(std::move(obj));
    if (next == std::string::npos) break;
    pos = next + 3;
  }
  if (static_cast<int>(inst.objectives.size()) != inst.m)
    throw std::runtime_error("parse_instance: objective count does not match m");
  return inst;
}

}  // namespace dela::randgen
