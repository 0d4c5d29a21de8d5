#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dela/benchmarks.hpp"
#include "dela/checkpoint.hpp"
#include "dela/config.hpp"
#include "dela/downstream.hpp"
#include "dela/ela.hpp"
#include "dela/model.hpp"
#include "dela/pretrain.hpp"
#include "dela/randgen.hpp"

namespace {

using namespace dela;

void atomic_write(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open " + tmp);
    os << content;
    if (!os) throw std::runtime_error("write failed for " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw std::runtime_error("rename to " + path + " failed");
}

std::vector<randgen::ProblemInstance> load_corpus(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open corpus " + path);
  std::vector<randgen::ProblemInstance> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    out.push_back(randgen::parse_instance(line));
  }
  if (out.empty()) throw std::runtime_error("corpus is empty: " + path);
  return out;
}

downstream::FeatureDataset load_features(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open features " + path);
  return downstream::parse_feature_csv(is);
}

struct GlobalOpts {
  std::uint64_t seed = 0;
  int precision = 64;
  int threads = 1;
};

// ----------------------------------------------------------------- commands

void cmd_gen(const GlobalOpts&, const std::string& config_path,
             const std::string& out_path) {
  auto settings = config::gen_settings(config::parse_file(config_path));
  Rng rng(settings.gen.seed);
  randgen::GenStats stats;
  std::ostringstream corpus;
  for (int i = 0; i < settings.n; ++i) {
    auto inst =
        randgen::generate_instance(settings.gen.d, settings.m, settings.gen, rng, &stats);
    corpus << randgen::serialize_instance(inst) << '\n';
  }
  atomic_write(out_path, corpus.str());
  std::cout << "instances=" << settings.n
            << " acceptance_rate=" << stats.acceptance_rate() << "\n";
  for (const auto& [op, count] : stats.op_histogram)
    std::cout << "op." << op << "=" << count << "\n";
}

template <class S>
void run_pretrain(const pretrain::TrainConfig& cfg,
                  const std::vector<randgen::ProblemInstance>& corpus,
                  const std::string& out_path, const std::string& metrics_path,
                  const std::string& resume_path) {
  pretrain::TrainState<S> st = resume_path.empty()
                                   ? pretrain::init_train_state<S>(cfg)
                                   : pretrain::from_snapshot<S>(
                                         checkpoint::load_checkpoint<S>(resume_path));
  std::ofstream metrics;
  if (!metrics_path.empty()) {
    metrics.open(metrics_path, st.step > 0 ? std::ios::app : std::ios::trunc);
    if (!metrics) throw std::runtime_error("cannot open metrics " + metrics_path);
  }
  double final_loss = pretrain::run_training<S>(
      st, corpus, metrics.is_open() ? &metrics : nullptr, out_path);
  std::cout << "steps=" << st.step << " final_loss=" << final_loss << "\n";
}

void cmd_pretrain(const GlobalOpts& g, const std::string& config_path,
                  const std::string& corpus_path, const std::string& out_path,
                  const std::string& metrics_path, const std::string& resume_path) {
  auto cfg = config::train_settings(config::parse_file(config_path));
  auto corpus = load_corpus(corpus_path);
  for (const auto& inst : corpus)
    if (inst.d > cfg.backbone.nu || inst.m > cfg.backbone.nu)
      throw std::runtime_error("corpus instance with d=" + std::to_string(inst.d) +
                               " m=" + std::to_string(inst.m) +
                               " exceeds nu=" + std::to_string(cfg.backbone.nu));
  if (g.precision == 32)
    run_pretrain<float>(cfg, corpus, out_path, metrics_path, resume_path);
  else
    run_pretrain<double>(cfg, corpus, out_path, metrics_path, resume_path);
}

void cmd_extract(const GlobalOpts& g, const std::string& ckpt_path,
                 const std::string& out_path, const std::vector<int>& fids,
                 const std::vector<int>& dims, std::uint64_t seed_lo,
                 std::uint64_t seed_hi, int multiplier, int reps) {
  auto snap = checkpoint::load_checkpoint<double>(ckpt_path);
  auto st = pretrain::from_snapshot<double>(snap);
  auto ds = downstream::extract_features(st.student_bb, st.cfg.backbone, fids, dims,
                                         seed_lo, seed_hi, multiplier, reps, g.seed);
  atomic_write(out_path, downstream::feature_csv(ds));
  for (const auto& s : ds.skipped) std::cerr << "skipped: " << s << "\n";
  std::cout << "rows=" << ds.rows.size() << " skipped=" << ds.skipped.size() << "\n";
}

void cmd_ela(const GlobalOpts& g, const std::string& out_path,
             const std::vector<int>& fids, const std::vector<int>& dims,
             std::uint64_t seed_lo, std::uint64_t seed_hi, int multiplier, int reps) {
  auto ds = downstream::extract_ela_features(fids, dims, seed_lo, seed_hi, multiplier,
                                             reps, g.seed);
  atomic_write(out_path, downstream::feature_csv(ds));
  std::cout << "rows=" << ds.rows.size() << " skipped=" << ds.skipped.size() << "\n";
}

// Per-(fid, dim) groups of the feature table, rows ordered as read.
std::map<std::pair<int, int>, Matrix> feature_groups(
    const downstream::FeatureDataset& ds) {
  std::map<std::pair<int, int>, std::vector<const downstream::FeatureRow*>> grouped;
  for (const auto& r : ds.rows) grouped[{r.key.fid, r.key.dim}].push_back(&r);
  std::map<std::pair<int, int>, Matrix> out;
  for (auto& [key, rows] : grouped) {
    Matrix m(rows.size(), rows[0]->features.size());
    for (std::size_t i = 0; i < rows.size(); ++i)
      m.row(static_cast<Eigen::Index>(i)) = rows[i]->features.transpose();
    out[key] = m;
  }
  return out;
}

void cmd_report_snr(const std::string& features_path, const std::string& out_path) {
  auto ds = load_features(features_path);
  auto groups = feature_groups(ds);
  Vector total = Vector::Zero(static_cast<Eigen::Index>(ds.feature_names.size()));
  int used = 0;
  for (const auto& [key, m] : groups) {
    if (m.rows() < 2) continue;
    total += ela::snr(m);
    used += 1;
  }
  if (used == 0) throw std::runtime_error("report snr: no group with >= 2 rows");
  total /= used;
  std::ostringstream os;
  os.precision(17);
  os << "feature_name,snr\n";
  for (std::size_t i = 0; i < ds.feature_names.size(); ++i)
    os << ds.feature_names[i] << ',' << total[static_cast<Eigen::Index>(i)] << '\n';
  atomic_write(out_path, os.str());
  std::cout << "groups=" << used << " features=" << ds.feature_names.size() << "\n";
}

void cmd_report_corr(const std::string& features_path, const std::string& out_path,
                     const std::string& ppm_path) {
  auto ds = load_features(features_path);
  std::vector<Matrix> groups;
  for (const auto& [key, m] : feature_groups(ds)) groups.push_back(m);
  auto rep = ela::corr_report(groups);
  std::ostringstream os;
  os.precision(17);
  os << "feature";
  for (const auto& n : ds.feature_names) os << ',' << n;
  os << '\n';
  for (Eigen::Index i = 0; i < rep.mean_abs_corr.rows(); ++i) {
    os << ds.feature_names[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < rep.mean_abs_corr.cols(); ++j)
      os << ',' << rep.mean_abs_corr(i, j);
    os << '\n';
  }
  atomic_write(out_path, os.str());
  if (!ppm_path.empty()) atomic_write(ppm_path, ela::render_ppm(rep.mean_abs_corr));
  std::cout << "groups_used=" << rep.groups_used
            << " groups_skipped=" << rep.groups_skipped << "\n";
}

void cmd_hlp(const std::string& features_path, const std::string& out_path,
             std::uint64_t train_lo, std::uint64_t train_hi, std::uint64_t test_lo,
             std::uint64_t test_hi, int k) {
  auto ds = load_features(features_path);
  auto results = downstream::hlp_experiment(ds, train_lo, train_hi, test_lo, test_hi, k);
  std::ostringstream os;
  os.precision(17);
  os << "property,dim,macro_f1\n";
  for (const auto& r : results) os << r.property << ',' << r.dim << ',' << r.f1 << '\n';
  atomic_write(out_path, os.str());
  for (const auto& r : results)
    std::cout << r.property << " d=" << r.dim << " macro_f1=" << r.f1 << "\n";
}

void cmd_aas(const std::string& features_path, const std::string& perf_path,
             const std::string& out_path, std::uint64_t train_lo,
             std::uint64_t train_hi, std::uint64_t test_lo, std::uint64_t test_hi,
             int k, double cost) {
  auto ds = load_features(features_path);
  std::ifstream pis(perf_path);
  if (!pis) throw std::runtime_error("cannot open perf table " + perf_path);
  auto perf = downstream::parse_perf_csv(pis);
  std::set<std::string> train_keys, test_keys;
  for (const auto& r : ds.rows) {
    if (r.key.instance_seed >= train_lo && r.key.instance_seed <= train_hi)
      train_keys.insert(r.key.str());
    if (r.key.instance_seed >= test_lo && r.key.instance_seed <= test_hi)
      test_keys.insert(r.key.str());
  }
  downstream::AasConfig cfg;
  cfg.k = k;
  cfg.sample_cost = cost;
  auto rep = downstream::aas_experiment(
      ds, perf, {train_keys.begin(), train_keys.end()},
      {test_keys.begin(), test_keys.end()}, cfg);
  std::ostringstream os;
  os.precision(17);
  os << "metric,sbs_name,selector_mean,sbs_mean,vbs_mean,n_test\n"
     << rep.metric << ',' << rep.sbs_name << ',' << rep.selector_mean << ','
     << rep.sbs_mean << ',' << rep.vbs_mean << ',' << rep.n_test << '\n';
  atomic_write(out_path, os.str());
  std::cout << "selector=" << rep.selector_mean << " sbs=" << rep.sbs_mean
            << " vbs=" << rep.vbs_mean << "\n";
}

void cmd_params(const std::string& preset, const std::string& out_path) {
  auto cfg = model::config_by_name(preset);
  const auto bb = model::backbone_param_count(cfg);
  const auto total = model::total_param_count(cfg);
  long long ref_bb = 0, ref_total = 0;
  if (preset == "medium") {
    ref_bb = 2263296;
    ref_total = 2355456;
  } else if (preset == "large") {
    ref_bb = 9189888;
    ref_total = 9558528;
  }
  std::ostringstream os;
  os << "preset=" << preset << "\n"
     << "backbone_params=" << bb << "\n"
     << "reference_backbone=" << (ref_bb ? std::to_string(ref_bb) : "n/a") << "\n"
     << "backbone_delta=" << (ref_bb ? std::to_string(bb - ref_bb) : "n/a") << "\n"
     << "total_params=" << total << "\n"
     << "reference_total=" << (ref_total ? std::to_string(ref_total) : "n/a") << "\n"
     << "total_delta=" << (ref_total ? std::to_string(total - ref_total) : "n/a")
     << "\n"
     << "conventions=bias on the input embedding only; attention and "
        "feed-forward projections bias-free; feed-forward d_model->4*d_model "
        "GLU then 2*d_model->d_model; projection-head hidden width 4*n_feat; "
        "total counts backbone + two heads + the teacher extractor copy\n";
  std::cout << os.str();
  if (!out_path.empty()) atomic_write(out_path, os.str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"deep landscape-feature toolkit"};
  app.require_subcommand(1);
  GlobalOpts g;
  app.add_option("--seed", g.seed, "global random seed");
  app.add_option("--precision", g.precision, "floating-point width")
      ->check(CLI::IsMember({32, 64}));
  app.add_option("--threads", g.threads, "worker threads (1 = fully deterministic)")
      ->check(CLI::PositiveNumber);

  std::string config_path, out_path, corpus_path, metrics_path, resume_path;
  std::string ckpt_path, features_path, perf_path, ppm_path, preset = "medium";
  std::vector<int> fids, dims{2};
  std::uint64_t seed_lo = 1, seed_hi = 10, train_lo = 1, train_hi = 40, test_lo = 41,
                test_hi = 50;
  int multiplier = 50, reps = 1, k = 5;
  double cost = 0;
  for (int f = 1; f <= 24; ++f) fids.push_back(f);

  auto* gen = app.add_subcommand("gen", "generate a random-function corpus");
  gen->add_option("--config", config_path)->required()->check(CLI::ExistingFile);
  gen->add_option("--out", out_path)->required();
  gen->callback([&] { cmd_gen(g, config_path, out_path); });

  auto* pre = app.add_subcommand("pretrain", "self-supervised pretraining");
  pre->add_option("--config", config_path)->required()->check(CLI::ExistingFile);
  pre->add_option("--corpus", corpus_path)->required()->check(CLI::ExistingFile);
  pre->add_option("--out", out_path)->required();
  pre->add_option("--metrics", metrics_path);
  pre->add_option("--resume", resume_path)->check(CLI::ExistingFile);
  pre->callback(
      [&] { cmd_pretrain(g, config_path, corpus_path, out_path, metrics_path, resume_path); });

  auto* ext = app.add_subcommand("extract", "deep features over the benchmark suite");
  ext->add_option("--checkpoint", ckpt_path)->required()->check(CLI::ExistingFile);
  ext->add_option("--out", out_path)->required();
  ext->add_option("--fids", fids)->delimiter(',');
  ext->add_option("--dims", dims)->delimiter(',');
  ext->add_option("--seed-lo", seed_lo);
  ext->add_option("--seed-hi", seed_hi);
  ext->add_option("--multiplier", multiplier);
  ext->add_option("--reps", reps);
  ext->callback([&] {
    cmd_extract(g, ckpt_path, out_path, fids, dims, seed_lo, seed_hi, multiplier, reps);
  });

  auto* elac = app.add_subcommand("ela", "classical features over the benchmark suite");
  elac->add_option("--out", out_path)->required();
  elac->add_option("--fids", fids)->delimiter(',');
  elac->add_option("--dims", dims)->delimiter(',');
  elac->add_option("--seed-lo", seed_lo);
  elac->add_option("--seed-hi", seed_hi);
  elac->add_option("--multiplier", multiplier);
  elac->add_option("--reps", reps);
  elac->callback(
      [&] { cmd_ela(g, out_path, fids, dims, seed_lo, seed_hi, multiplier, reps); });

  auto* rep = app.add_subcommand("report", "feature diagnostics");
  auto* snr = rep->add_subcommand("snr", "signal-to-noise per feature");
  snr->add_option("--features", features_path)->required()->check(CLI::ExistingFile);
  snr->add_option("--out", out_path)->required();
  snr->callback([&] { cmd_report_snr(features_path, out_path); });
  auto* corr = rep->add_subcommand("corr", "aggregated absolute correlations");
  corr->add_option("--features", features_path)->required()->check(CLI::ExistingFile);
  corr->add_option("--out", out_path)->required();
  corr->add_option("--ppm", ppm_path);
  corr->callback([&] { cmd_report_corr(features_path, out_path, ppm_path); });
  rep->require_subcommand(1);

  auto* hlp = app.add_subcommand("hlp", "high-level property classification");
  hlp->add_option("--features", features_path)->required()->check(CLI::ExistingFile);
  hlp->add_option("--out", out_path)->required();
  hlp->add_option("--train-lo", train_lo);
  hlp->add_option("--train-hi", train_hi);
  hlp->add_option("--test-lo", test_lo);
  hlp->add_option("--test-hi", test_hi);
  hlp->add_option("--k", k);
  hlp->callback(
      [&] { cmd_hlp(features_path, out_path, train_lo, train_hi, test_lo, test_hi, k); });

  auto* aas = app.add_subcommand("aas", "automated algorithm selection");
  aas->add_option("--features", features_path)->required()->check(CLI::ExistingFile);
  aas->add_option("--perf", perf_path)->required()->check(CLI::ExistingFile);
  aas->add_option("--out", out_path)->required();
  aas->add_option("--train-lo", train_lo);
  aas->add_option("--train-hi", train_hi);
  aas->add_option("--test-lo", test_lo);
  aas->add_option("--test-hi", test_hi);
  aas->add_option("--k", k);
  aas->add_option("--cost", cost);
  aas->callback([&] {
    cmd_aas(features_path, perf_path, out_path, train_lo, train_hi, test_lo, test_hi, k,
            cost);
  });

  auto* par = app.add_subcommand("params", "parameter-count table");
  par->add_option("--preset", preset)->check(CLI::IsMember({"tiny", "medium", "large"}));
  par->add_option("--out", out_path);
  par->callback([&] { cmd_params(preset, out_path); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
