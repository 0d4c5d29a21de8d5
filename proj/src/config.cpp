#include "dela/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "dela/model.hpp"

namespace dela::config {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void fail(int line, const std::string& msg) {
  throw ConfigError("config line " + std::to_string(line) + ": " + msg);
}

double to_double(const Entry& e, const std::string& key) {
  try {
    std::size_t pos;
    double v = std::stod(e.value, &pos);
    if (pos != e.value.size()) throw std::invalid_argument("");
    return v;
  } catch (...) {
    fail(e.line, "invalid number for " + key + ": '" + e.value + "'");
  }
}

long long to_int(const Entry& e, const std::string& key) {
  try {
    std::size_t pos;
    long long v = std::stoll(e.value, &pos);
    if (pos != e.value.size()) throw std::invalid_argument("");
    return v;
  } catch (...) {
    fail(e.line, "invalid integer for " + key + ": '" + e.value + "'");
  }
}

bool to_bool(const Entry& e, const std::string& key) {
  if (e.value == "true" || e.value == "1") return true;
  if (e.value == "false" || e.value == "0") return false;
  fail(e.line, "invalid boolean for " + key + ": '" + e.value + "'");
}

void reject_unknown(const std::map<std::string, Entry>& section,
                    const std::set<std::string>& allowed) {
  for (const auto& [key, entry] : section)
    if (!allowed.count(key)) fail(entry.line, "unknown key '" + key + "'");
}

}  // namespace

ParsedConfig parse_text(const std::string& text) {
  ParsedConfig out;
  std::istringstream is(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t.front() == '[') {
      if (t.back() != ']') fail(lineno, "unterminated section header");
      section = trim(t.substr(1, t.size() - 2));
      if (section.empty()) fail(lineno, "empty section name");
      out.sections[section];
      continue;
    }
    auto eq = t.find('=');
    if (eq == std::string::npos) fail(lineno, "expected key = value");
    if (section.empty()) fail(lineno, "key outside any [section]");
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (key.empty()) fail(lineno, "empty key");
    if (out.sections[section].count(key)) fail(lineno, "duplicate key '" + key + "'");
    out.sections[section][key] = {value, lineno};
  }
  return out;
}

ParsedConfig parse_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("config: cannot open " + path);
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse_text(buf.str());
}

GenSettings gen_settings(const ParsedConfig& cfg) {
  if (!cfg.has("generator")) throw ConfigError("config: missing [generator] section");
  const auto& s = cfg.sections.at("generator");
  reject_unknown(s, {"n", "d", "m", "op_lower", "op_upper", "seed", "value_cap",
                     "min_std", "probe_size", "box_lo", "box_hi"});
  GenSettings out;
  auto get = [&](const std::string& key) -> const Entry* {
    auto it = s.find(key);
    return it == s.end() ? nullptr : &it->second;
  };
  if (auto* e = get("n")) out.n = static_cast<int>(to_int(*e, "n"));
  if (auto* e = get("d")) out.gen.d = static_cast<int>(to_int(*e, "d"));
  if (auto* e = get("m")) out.m = static_cast<int>(to_int(*e, "m"));
  if (auto* e = get("op_lower"))
    out.gen.op_lower = static_cast<int>(to_int(*e, "op_lower"));
  if (auto* e = get("op_upper"))
    out.gen.op_upper = static_cast<int>(to_int(*e, "op_upper"));
  if (auto* e = get("seed"))
    out.gen.seed = static_cast<std::uint64_t>(to_int(*e, "seed"));
  if (auto* e = get("value_cap")) out.gen.value_cap = to_double(*e, "value_cap");
  if (auto* e = get("min_std")) out.gen.min_std = to_double(*e, "min_std");
  if (auto* e = get("probe_size"))
    out.gen.probe_size = static_cast<int>(to_int(*e, "probe_size"));
  if (auto* e = get("box_lo")) out.gen.box_lo = to_double(*e, "box_lo");
  if (auto* e = get("box_hi")) out.gen.box_hi = to_double(*e, "box_hi");
  if (out.n < 1) throw ConfigError("config: [generator] n must be >= 1");
  if (out.m < 1) throw ConfigError("config: [generator] m must be >= 1");
  if (!out.gen.valid()) throw ConfigError("config: invalid [generator] settings");
  return out;
}

pretrain::TrainConfig train_settings(const ParsedConfig& cfg) {
  if (!cfg.has("pretrain")) throw ConfigError("config: missing [pretrain] section");
  const auto& s = cfg.sections.at("pretrain");
  reject_unknown(
      s, {"preset", "nu", "k", "heads", "d_model", "depth", "n_feat", "stride",
          "dropout", "batch_size", "tau", "steps", "lr", "warmup_fraction",
          "grad_accum", "ema_momentum", "bn_momentum", "sample_multiplier", "d_min",
          "d_max", "m_min", "m_max", "seed", "checkpoint_every", "aug_rotate",
          "aug_invert", "aug_permute", "aug_independent_resample"});
  pretrain::TrainConfig out;
  auto get = [&](const std::string& key) -> const Entry* {
    auto it = s.find(key);
    return it == s.end() ? nullptr : &it->second;
  };
  if (auto* e = get("preset")) {
    try {
      out.backbone = model::config_by_name(e->value);
    } catch (const std::invalid_argument& ex) {
      fail(e->line, ex.what());
    }
  }
  if (auto* e = get("nu")) out.backbone.nu = static_cast<int>(to_int(*e, "nu"));
  if (auto* e = get("k")) out.backbone.k = static_cast<int>(to_int(*e, "k"));
  if (auto* e = get("heads"))
    out.backbone.heads = static_cast<int>(to_int(*e, "heads"));
  if (auto* e = get("d_model"))
    out.backbone.d_model = static_cast<int>(to_int(*e, "d_model"));
  if (auto* e = get("depth"))
    out.backbone.depth = static_cast<int>(to_int(*e, "depth"));
  if (auto* e = get("n_feat"))
    out.backbone.n_feat = static_cast<int>(to_int(*e, "n_feat"));
  if (auto* e = get("stride"))
    out.backbone.stride = static_cast<int>(to_int(*e, "stride"));
  if (auto* e = get("dropout")) out.backbone.dropout = to_double(*e, "dropout");
  if (auto* e = get("batch_size"))
    out.batch_size = static_cast<int>(to_int(*e, "batch_size"));
  if (auto* e = get("tau")) out.tau = to_double(*e, "tau");
  if (auto* e = get("steps")) out.steps = static_cast<int>(to_int(*e, "steps"));
  if (auto* e = get("lr")) out.lr = to_double(*e, "lr");
  if (auto* e = get("warmup_fraction"))
    out.warmup_fraction = to_double(*e, "warmup_fraction");
  if (auto* e = get("grad_accum"))
    out.grad_accum = static_cast<int>(to_int(*e, "grad_accum"));
  if (auto* e = get("ema_momentum")) out.ema_momentum = to_double(*e, "ema_momentum");
  if (auto* e = get("bn_momentum")) out.bn_momentum = to_double(*e, "bn_momentum");
  if (auto* e = get("sample_multiplier"))
    out.sample_multiplier = static_cast<int>(to_int(*e, "sample_multiplier"));
  if (auto* e = get("d_min")) out.d_min = static_cast<int>(to_int(*e, "d_min"));
  if (auto* e = get("d_max")) out.d_max = static_cast<int>(to_int(*e, "d_max"));
  if (auto* e = get("m_min")) out.m_min = static_cast<int>(to_int(*e, "m_min"));
  if (auto* e = get("m_max")) out.m_max = static_cast<int>(to_int(*e, "m_max"));
  if (auto* e = get("seed"))
    out.seed = static_cast<std::uint64_t>(to_int(*e, "seed"));
  if (auto* e = get("checkpoint_every"))
    out.checkpoint_every = static_cast<int>(to_int(*e, "checkpoint_every"));
  if (auto* e = get("aug_rotate")) out.aug.rotate = to_bool(*e, "aug_rotate");
  if (auto* e = get("aug_invert")) out.aug.invert = to_bool(*e, "aug_invert");
  if (auto* e = get("aug_permute"))
    out.aug.permute_columns = to_bool(*e, "aug_permute");
  if (auto* e = get("aug_independent_resample"))
    out.aug.independent_resample = to_bool(*e, "aug_independent_resample");
  out.validate();
  return out;
}

}  // namespace dela::config
