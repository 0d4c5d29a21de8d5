#include "dela/downstream.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include "dela/ela.hpp"
#include "dela/sampling.hpp"
#include "dela/tokenizer.hpp"

namespace dela::downstream {

namespace {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

std::uint64_t combo_seed(std::uint64_t base, int fid, int dim, std::uint64_t iseed,
                         int rep) {
  std::uint64_t h = mix64(base);
  h = mix64(h ^ static_cast<std::uint64_t>(fid));
  h = mix64(h ^ static_cast<std::uint64_t>(dim));
  h = mix64(h ^ iseed);
  return mix64(h ^ static_cast<std::uint64_t>(rep));
}

}  // namespace

std::string InstanceKey::str() const {
  std::ostringstream os;
  if (fid > 0)
    os << 'f' << fid;
  else
    os << suite;
  os << "_d" << dim << "_s" << instance_seed;
  return os.str();
}

// ------------------------------------------------------------- extraction

Vector deep_features(const model::BackboneParams<double>& params,
                     const model::BackboneConfig& cfg,
                     const randgen::ProblemInstance& inst, int multiplier, Rng& rng) {
  if (inst.d > cfg.nu || inst.m > cfg.nu)
    throw std::invalid_argument("deep_features: d or m exceeds nu");
  const int n = std::max(cfg.k, multiplier * inst.d);
  Sample s;
  s.X = sampling::uniform_sample(inst.bounds, n, rng);
  auto y = inst.evaluate(s.X);
  if (!y) throw std::runtime_error("deep_features: instance evaluation failed");
  s.Y = *y;
  auto tokens = tokenizer::tokenize(s, cfg.k, cfg.nu, cfg.stride);
  return model::forward_features(params, cfg, tokens);
}

FeatureDataset extract_features(const model::BackboneParams<double>& params,
                                const model::BackboneConfig& cfg,
                                const std::vector<int>& fids,
                                const std::vector<int>& dims,
                                std::uint64_t seed_lo, std::uint64_t seed_hi,
                                int multiplier, int repetitions, std::uint64_t seed) {
  FeatureDataset ds;
  for (int i = 0; i < cfg.n_feat; ++i)
    ds.feature_names.push_back("deep_" + std::to_string(i));
  for (int dim : dims)
    for (int fid : fids)
      for (std::uint64_t s = seed_lo; s <= seed_hi; ++s)
        for (int rep = 0; rep < repetitions; ++rep) {
          InstanceKey key{fid, "", s, dim, rep};
          if (dim > cfg.nu) {
            ds.skipped.push_back(key.str() + ": d exceeds nu");
            continue;
          }
          auto bench = benchmarks::make_benchmark({fid, "", s}, dim);
          Rng rng(combo_seed(seed, fid, dim, s, rep));
          ds.rows.push_back(
              {key, deep_features(params, cfg, bench.problem, multiplier, rng),
               "deep"});
        }
  return ds;
}

FeatureDataset extract_ela_features(const std::vector<int>& fids,
                                    const std::vector<int>& dims,
                                    std::uint64_t seed_lo, std::uint64_t seed_hi,
                                    int multiplier, int repetitions,
                                    std::uint64_t seed) {
  FeatureDataset ds;
  for (int dim : dims)
    for (int fid : fids)
      for (std::uint64_t s = seed_lo; s <= seed_hi; ++s)
        for (int rep = 0; rep < repetitions; ++rep) {
          auto bench = benchmarks::make_benchmark({fid, "", s}, dim);
          Rng rng(combo_seed(seed, fid, dim, s, rep));
          Sample smp;
          const int n = std::max(10, multiplier * dim);
          smp.X = sampling::uniform_sample(bench.problem.bounds, n, rng);
          auto y = bench.problem.evaluate(smp.X);
          if (!y) {
            ds.skipped.push_back(InstanceKey{fid, "", s, dim, rep}.str() +
                                 ": evaluation failed");
            continue;
          }
          smp.Y = *y;
          auto fm = ela::all_features(smp);
          if (ds.feature_names.empty())
            for (auto& kv : fm) ds.feature_names.push_back(kv.first);
          Vector v(fm.size());
          for (std::size_t i = 0; i < fm.size(); ++i) v[i] = fm[i].second;
          ds.rows.push_back({InstanceKey{fid, "", s, dim, rep}, v, "ela"});
        }
  return ds;
}

// ----------------------------------------------------------- classification

std::vector<std::string> knn_classify(const std::vector<Vector>& train_x,
                                      const std::vector<std::string>& train_y,
                                      const std::vector<Vector>& test_x, int k) {
  if (train_x.empty()) throw std::invalid_argument("knn_classify: empty train set");
  if (train_x.size() != train_y.size())
    throw std::invalid_argument("knn_classify: train size mismatch");
  if (k < 1 || k > static_cast<int>(train_x.size()))
    throw std::invalid_argument("knn_classify: need 1 <= k <= train size");

  std::vector<std::string> out;
  out.reserve(test_x.size());
  const int n = static_cast<int>(train_x.size());
  for (const Vector& q : test_x) {
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> dist(n);
    for (int i = 0; i < n; ++i) dist[i] = (train_x[i] - q).norm();
    std::partial_sort(order.begin(), order.begin() + k, order.end(),
                      [&](int a, int b) {
                        return dist[a] != dist[b] ? dist[a] < dist[b] : a < b;
                      });
    std::map<std::string, std::pair<int, double>> votes;  // count, summed dist
    for (int i = 0; i < k; ++i) {
      auto& v = votes[train_y[order[i]]];
      v.first += 1;
      v.second += dist[order[i]];
    }
    const std::string* best = nullptr;
    for (const auto& [label, v] : votes) {
      if (!best) {
        best = &label;
        continue;
      }
      const auto& b = votes.at(*best);
      if (v.first > b.first ||
          (v.first == b.first && v.second < b.second))
        best = &label;
      // equal count and distance: std::map iteration is lexicographic,
      // so the earlier label is kept
    }
    out.push_back(*best);
  }
  return out;
}

double macro_f1(const std::vector<std::string>& predictions,
                const std::vector<std::string>& labels) {
  if (predictions.empty() || predictions.size() != labels.size())
    throw std::invalid_argument("macro_f1: empty input or length mismatch");
  std::set<std::string> classes(labels.begin(), labels.end());
  double total = 0;
  for (const std::string& c : classes) {
    int tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const bool actual = labels[i] == c, pred = predictions[i] == c;
      tp += actual && pred;
      fp += !actual && pred;
      fn += actual && !pred;
    }
    const double prec = tp + fp > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
    const double rec = tp + fn > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
    total += prec + rec > 0 ? 2 * prec * rec / (prec + rec) : 0.0;
  }
  return total / static_cast<double>(classes.size());
}

std::vector<HlpResult> hlp_experiment(const FeatureDataset& features,
                                      std::uint64_t train_lo, std::uint64_t train_hi,
                                      std::uint64_t test_lo, std::uint64_t test_hi,
                                      int k) {
  std::set<int> dims;
  for (const auto& r : features.rows)
    if (r.key.fid >= 1) dims.insert(r.key.dim);

  const char* props[] = {"multimodality", "global_structure", "funnel"};
  std::vector<HlpResult> out;
  for (int dim : dims) {
    std::vector<const FeatureRow*> train, test;
    for (const auto& r : features.rows) {
      if (r.key.fid < 1 || r.key.dim != dim) continue;
      if (r.key.instance_seed >= train_lo && r.key.instance_seed <= train_hi)
        train.push_back(&r);
      if (r.key.instance_seed >= test_lo && r.key.instance_seed <= test_hi)
        test.push_back(&r);
    }
    if (train.empty() || test.empty()) continue;
    std::vector<Vector> tx, sx;
    for (auto* r : train) tx.push_back(r->features);
    for (auto* r : test) sx.push_back(r->features);
    for (const char* prop : props) {
      auto label_of = [&](int fid) {
        auto l = benchmarks::hlp_labels(fid);
        if (std::string(prop) == "multimodality") return to_string(l.multimodality);
        if (std::string(prop) == "global_structure")
          return to_string(l.global_structure);
        return to_string(l.funnel);
      };
      std::vector<std::string> ty, sy;
      for (auto* r : train) ty.push_back(label_of(r->key.fid));
      for (auto* r : test) sy.push_back(label_of(r->key.fid));
      auto preds = knn_classify(tx, ty, sx, std::min<int>(k, static_cast<int>(tx.size())));
      out.push_back({prop, dim, macro_f1(preds, sy)});
    }
  }
  return out;
}

// ----------------------------------------------------------------- metrics

bool pareto_dominates(const Vector& a, const Vector& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("pareto_dominates: length mismatch");
  bool strict = false;
  for (int i = 0; i < a.size(); ++i) {
    if (a[i] > b[i]) return false;
    if (a[i] < b[i]) strict = true;
  }
  return strict;
}

std::vector<int> pareto_front(const Matrix& points) {
  const int n = static_cast<int>(points.rows());
  std::vector<int> front;
  for (int i = 0; i < n; ++i) {
    bool keep = true;
    for (int j = 0; j < n && keep; ++j) {
      if (j == i) continue;
      if (pareto_dominates(points.row(j), points.row(i))) keep = false;
      if (j < i && points.row(j) == points.row(i)) keep = false;  // duplicate
    }
    if (keep) front.push_back(i);
  }
  return front;
}

double hypervolume_2d(const Matrix& front, const Vector& ref) {
  if (front.cols() != 2 || ref.size() != 2)
    throw std::invalid_argument("hypervolume_2d: two objectives required");
  if (front.rows() < 1) throw std::invalid_argument("hypervolume_2d: empty front");
  std::vector<int> keep = pareto_front(front);
  std::vector<std::pair<double, double>> pts;
  for (int i : keep) {
    if (!(front(i, 0) < ref[0] && front(i, 1) < ref[1]))
      throw std::invalid_argument("hypervolume_2d: point does not dominate ref");
    pts.emplace_back(front(i, 0), front(i, 1));
  }
  std::sort(pts.begin(), pts.end());
  double hv = 0, prev_y = ref[1];
  for (const auto& [x, y] : pts) {
    hv += (ref[0] - x) * (prev_y - y);
    prev_y = y;
  }
  return hv;
}

double relert(double ert, double sample_cost, double ert_vbs) {
  if (ert_vbs <= 0) throw std::invalid_argument("relert: VBS ERT must be positive");
  if (ert <= 0 || sample_cost < 0)
    throw std::invalid_argument("relert: bad ERT or cost");
  return (ert + sample_cost) / ert_vbs;
}

double relhv(double hv, double hv_sbs, double hv_vbs) {
  if (hv_vbs < hv_sbs)
    throw std::invalid_argument("relhv: hv_vbs < hv_sbs (inconsistent table)");
  return (hv - hv_sbs + 1e-8) / (hv_vbs - hv_sbs + 1e-8);
}

AasReport aas_experiment(const FeatureDataset& features, const PerfTable& perf,
                         const std::vector<std::string>& train_keys,
                         const std::vector<std::string>& test_keys,
                         const AasConfig& cfg) {
  if (perf.metric != "ert" && perf.metric != "hv")
    throw std::invalid_argument("aas_experiment: metric must be ert or hv");
  const bool maximize = perf.metric == "hv";

  // mean metric per (instance, algorithm) over repetitions
  std::map<std::string, std::map<std::string, std::pair<double, int>>> acc;
  std::set<std::string> algos;
  for (const auto& r : perf.records) {
    auto& slot = acc[r.instance_key][r.algorithm];
    slot.first += r.value;
    slot.second += 1;
    algos.insert(r.algorithm);
  }
  std::map<std::string, std::map<std::string, double>> value;
  for (auto& [key, by_algo] : acc) {
    if (by_algo.size() != algos.size())
      throw std::runtime_error("aas_experiment: missing algorithm records for " + key);
    for (auto& [a, slot] : by_algo) value[key][a] = slot.first / slot.second;
  }

  std::map<std::string, const FeatureRow*> by_key;
  for (const auto& r : features.rows) by_key[r.key.str()] = &r;

  std::vector<std::string> unjoined;
  auto require = [&](const std::vector<std::string>& keys) {
    for (const auto& k : keys)
      if (!by_key.count(k) || !value.count(k)) unjoined.push_back(k);
  };
  require(train_keys);
  require(test_keys);
  if (!unjoined.empty()) {
    std::string msg = "aas_experiment: unjoinable keys:";
    for (const auto& k : unjoined) msg += " " + k;
    throw std::runtime_error(msg);
  }

  auto best_algo = [&](const std::string& key) {
    std::string best;
    double bv = maximize ? -std::numeric_limits<double>::infinity()
                         : std::numeric_limits<double>::infinity();
    for (const auto& a : algos) {  // set order: lexicographic tie-break
      double v = value[key][a];
      if (maximize ? v > bv : v < bv) {
        bv = v;
        best = a;
      }
    }
    return best;
  };
  auto vbs_value = [&](const std::string& key) { return value[key][best_algo(key)]; };

  // SBS: best mean VBS-normalized score on the training portion.
  std::string sbs;
  double sbs_score = maximize ? -std::numeric_limits<double>::infinity()
                              : std::numeric_limits<double>::infinity();
  for (const auto& a : algos) {
    double total = 0;
    for (const auto& key : train_keys)
      total += maximize ? value[key][a] / std::max(vbs_value(key), 1e-300)
                        : value[key][a] / vbs_value(key);
    const double mean = total / static_cast<double>(train_keys.size());
    if (maximize ? mean > sbs_score : mean < sbs_score) {
      sbs_score = mean;
      sbs = a;
    }
  }

  std::vector<Vector> tx, sx;
  std::vector<std::string> ty;
  for (const auto& key : train_keys) {
    tx.push_back(by_key[key]->features);
    ty.push_back(best_algo(key));
  }
  for (const auto& key : test_keys) sx.push_back(by_key[key]->features);
  auto preds = knn_classify(tx, ty, sx, std::min<int>(cfg.k, static_cast<int>(tx.size())));

  AasReport rep;
  rep.metric = perf.metric;
  rep.sbs_name = sbs;
  rep.n_test = static_cast<int>(test_keys.size());
  for (std::size_t i = 0; i < test_keys.size(); ++i) {
    const std::string& key = test_keys[i];
    const double vbs = vbs_value(key);
    if (maximize) {
      const double hv_sbs = value[key][sbs];
      rep.selector_mean += relhv(value[key][preds[i]], hv_sbs, vbs);
      rep.sbs_mean += relhv(hv_sbs, hv_sbs, vbs);
      rep.vbs_mean += 1.0;
    } else {
      rep.selector_mean += relert(value[key][preds[i]], cfg.sample_cost, vbs);
      rep.sbs_mean += relert(value[key][sbs], 0.0, vbs);
      rep.vbs_mean += 1.0;
    }
  }
  rep.selector_mean /= rep.n_test;
  rep.sbs_mean /= rep.n_test;
  rep.vbs_mean /= rep.n_test;
  return rep;
}

// --------------------------------------------------------------------- io

std::string feature_csv(const FeatureDataset& ds) {
  std::ostringstream os;
  os << "instance_id,fid,suite,dim,instance_seed,repetition,source,feature_name,"
        "value\n";
  os.precision(17);
  for (const auto& r : ds.rows)
    for (int i = 0; i < r.features.size(); ++i)
      os << r.key.str() << ',' << r.key.fid << ',' << r.key.suite << ','
         << r.key.dim << ',' << r.key.instance_seed << ',' << r.key.repetition
         << ',' << r.source << ','
         << (i < static_cast<int>(ds.feature_names.size())
                 ? ds.feature_names[i]
                 : "feat_" + std::to_string(i))
         << ',' << r.features[i] << '\n';
  return os.str();
}

namespace {
std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}
}  // namespace

FeatureDataset parse_feature_csv(std::istream& is) {
  FeatureDataset ds;
  std::string line;
  if (!std::getline(is, line))
    throw std::runtime_error("parse_feature_csv: empty file");
  std::map<std::string, std::size_t> row_of;
  std::map<std::string, int> name_idx;
  std::vector<std::vector<double>> values;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto f = split_csv(line);
    if (f.size() != 9)
      throw std::runtime_error("parse_feature_csv: bad record: " + line);
    InstanceKey key{std::stoi(f[1]), f[2], std::stoull(f[4]), std::stoi(f[3]),
                    std::stoi(f[5])};
    std::string row_key = key.str() + "#" + f[5] + "#" + f[6];
    if (!name_idx.count(f[7])) {
      name_idx[f[7]] = static_cast<int>(ds.feature_names.size());
      ds.feature_names.push_back(f[7]);
    }
    if (!row_of.count(row_key)) {
      row_of[row_key] = ds.rows.size();
      ds.rows.push_back({key, Vector(), f[6]});
      values.emplace_back();
    }
    auto& vals = values[row_of[row_key]];
    const int idx = name_idx[f[7]];
    if (static_cast<int>(vals.size()) <= idx) vals.resize(idx + 1, 0.0);
    vals[idx] = std::stod(f[8]);
  }
  for (std::size_t i = 0; i < ds.rows.size(); ++i) {
    ds.rows[i].features = Eigen::Map<Vector>(values[i].data(),
                                             static_cast<Eigen::Index>(values[i].size()));
    if (!ds.rows[i].features.allFinite())
      throw std::runtime_error("parse_feature_csv: non-finite feature value");
  }
  return ds;
}

PerfTable parse_perf_csv(std::istream& is) {
  PerfTable t;
  std::string line;
  if (!std::getline(is, line) ||
      line != "instance_key,algorithm,repetition,metric,value")
    throw std::runtime_error("parse_perf_csv: missing or bad header");
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto f = split_csv(line);
    if (f.size() != 5) throw std::runtime_error("parse_perf_csv: bad record: " + line);
    if (t.metric.empty())
      t.metric = f[3];
    else if (t.metric != f[3])
      throw std::runtime_error("parse_perf_csv: mixed metric kinds");
    double v = std::stod(f[4]);
    if (t.metric == "ert" && v <= 0)
      throw std::runtime_error("parse_perf_csv: ERT must be positive");
    if (t.metric == "hv" && v < 0)
      throw std::runtime_error("parse_perf_csv: HV must be nonnegative");
    t.records.push_back({f[0], f[1], std::stoi(f[2]), v});
  }
  return t;
}

std::string perf_csv(const PerfTable& t) {
  std::ostringstream os;
  os << "instance_key,algorithm,repetition,metric,value\n";
  os.precision(17);
  for (const auto& r : t.records)
    os << r.instance_key << ',' << r.algorithm << ',' << r.repetition << ','
       << t.metric << ',' << r.value << '\n';
  return os.str();
}

}  // namespace dela::downstream
