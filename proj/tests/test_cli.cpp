#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace {

int run(const std::string& args) {
  std::string cmd = std::string(DELA_BIN) + " " + args +
                    " > cli_stdout.txt 2> cli_stderr.txt";
  int rc = std::system(cmd.c_str());
  REQUIRE(rc != -1);
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  REQUIRE(is.good());
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

std::string last_stdout() { return read_file("cli_stdout.txt"); }

void write_file(const std::string& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  REQUIRE(os.good());
  os << content;
}

const char* kGenConfig =
    "[generator]\n"
    "n = 20\n"
    "d = 2\n"
    "m = 1\n"
    "seed = 5\n";

const char* kTrainConfig =
    "[pretrain]\n"
    "nu = 2\nk = 2\nheads = 2\nd_model = 8\ndepth = 1\nn_feat = 4\nstride = 1\n"
    "batch_size = 4\nsteps = 4\nsample_multiplier = 5\n"
    "d_min = 2\nd_max = 2\nm_min = 1\nm_max = 1\n"
    "checkpoint_every = 2\nseed = 1\n";

}  // namespace

TEST_CASE("help and usage errors") {
  CHECK(run("--help") == 0);
  CHECK(run("params --help") == 0);
  CHECK(run("--no-such-flag") == 2);
  CHECK(run("") == 2);                       // a subcommand is required
  CHECK(run("params --preset giant") == 2);  // not in the allowed set
  CHECK(run("gen --config missing.cfg --out x.txt") == 2);
}

TEST_CASE("parameter count table") {
  CHECK(run("params --preset medium --out cli_params.txt") == 0);
  std::string out = last_stdout();
  CHECK(out.find("backbone_params=2263296") != std::string::npos);
  CHECK(out.find("backbone_delta=0") != std::string::npos);
  CHECK(out.find("total_delta=0") != std::string::npos);
  CHECK(read_file("cli_params.txt") == out);
  CHECK(run("params --preset large") == 0);
  CHECK(last_stdout().find("total_params=9558528") != std::string::npos);
}

TEST_CASE("corpus generation is reproducible byte for byte") {
  write_file("cli_gen.cfg", kGenConfig);
  CHECK(run("gen --config cli_gen.cfg --out cli_corpus_a.txt") == 0);
  std::string report = last_stdout();
  CHECK(report.find("instances=20") != std::string::npos);
  CHECK(report.find("acceptance_rate=") != std::string::npos);
  CHECK(run("gen --config cli_gen.cfg --out cli_corpus_b.txt") == 0);
  CHECK(read_file("cli_corpus_a.txt") == read_file("cli_corpus_b.txt"));
}

TEST_CASE("generation failure surfaces as a runtime error") {
  write_file("cli_gen_bad.cfg",
             "[generator]\nn = 1\nd = 2\nmin_std = 1e9\nseed = 1\n");
  CHECK(run("gen --config cli_gen_bad.cfg --out cli_never.txt") == 1);
  write_file("cli_gen_unknown.cfg", "[generator]\nn = 1\nfoo = 2\n");
  CHECK(run("gen --config cli_gen_unknown.cfg --out cli_never.txt") == 1);
}

TEST_CASE("pretraining, resume, extraction, reports and experiments") {
  write_file("cli_gen.cfg", kGenConfig);
  REQUIRE(run("gen --config cli_gen.cfg --out cli_corpus.txt") == 0);
  write_file("cli_train.cfg", kTrainConfig);

  REQUIRE(run("pretrain --config cli_train.cfg --corpus cli_corpus.txt "
              "--out cli_ckpt.bin --metrics cli_metrics.csv") == 0);
  CHECK(last_stdout().find("steps=4") != std::string::npos);
  std::string metrics = read_file("cli_metrics.csv");
  CHECK(metrics.rfind("step,loss,pos_cos,neg_cos,lr", 0) == 0);
  int lines = 0;
  for (char c : metrics)
    if (c == '\n') ++lines;
  CHECK(lines == 5);  // header + one line per step

  // resuming a finished run is a no-op that rewrites the same checkpoint
  std::string ckpt = read_file("cli_ckpt.bin");
  REQUIRE(run("pretrain --config cli_train.cfg --corpus cli_corpus.txt "
              "--out cli_ckpt.bin --resume cli_ckpt.bin") == 0);
  CHECK(last_stdout().find("steps=4") != std::string::npos);
  CHECK(read_file("cli_ckpt.bin") == ckpt);

  REQUIRE(run("extract --checkpoint cli_ckpt.bin --out cli_deep.csv "
              "--fids 1,2,8 --dims 2 --seed-lo 1 --seed-hi 3 --multiplier 5") == 0);
  CHECK(last_stdout().find("rows=9") != std::string::npos);
  std::string features = read_file("cli_deep.csv");
  CHECK(features.rfind("instance_id,fid,suite,dim,instance_seed,repetition,"
                       "source,feature_name,value", 0) == 0);

  // wide dimensions are skipped, not fatal
  REQUIRE(run("extract --checkpoint cli_ckpt.bin --out cli_deep5.csv "
              "--fids 1 --dims 5 --seed-lo 1 --seed-hi 1 --multiplier 5") == 0);
  CHECK(last_stdout().find("rows=0") != std::string::npos);
  CHECK(last_stdout().find("skipped=1") != std::string::npos);

  REQUIRE(run("ela --out cli_ela.csv --fids 1,2,8 --dims 2 "
              "--seed-lo 1 --seed-hi 3 --multiplier 40") == 0);
  CHECK(read_file("cli_ela.csv").find(",ela,") != std::string::npos);

  REQUIRE(run("report snr --features cli_deep.csv --out cli_snr.csv") == 0);
  CHECK(read_file("cli_snr.csv").rfind("feature_name,snr", 0) == 0);
  REQUIRE(run("report corr --features cli_deep.csv --out cli_corr.csv "
              "--ppm cli_corr.ppm") == 0);
  CHECK(read_file("cli_corr.ppm").rfind("P6\n", 0) == 0);

  REQUIRE(run("hlp --features cli_deep.csv --out cli_hlp.csv "
              "--train-lo 1 --train-hi 2 --test-lo 3 --test-hi 3 --k 1") == 0);
  CHECK(read_file("cli_hlp.csv").rfind("property,dim,macro_f1", 0) == 0);

  // a small ert table covering every extracted instance and two algorithms
  std::ostringstream perf;
  perf << "instance_key,algorithm,repetition,metric,value\n";
  for (int fid : {1, 2, 8})
    for (int s = 1; s <= 3; ++s) {
      perf << 'f' << fid << "_d2_s" << s << ",alg_a,0," << "ert," << 100 + fid << "\n";
      perf << 'f' << fid << "_d2_s" << s << ",alg_b,0," << "ert," << 90 + s << "\n";
    }
  write_file("cli_perf.csv", perf.str());
  REQUIRE(run("aas --features cli_deep.csv --perf cli_perf.csv --out cli_aas.csv "
              "--train-lo 1 --train-hi 2 --test-lo 3 --test-hi 3 --k 1") == 0);
  CHECK(read_file("cli_aas.csv").rfind("metric,sbs_name,selector_mean", 0) == 0);

  // corpus/model dimension mismatch is rejected up front
  write_file("cli_gen3.cfg", "[generator]\nn = 2\nd = 3\nseed = 2\n");
  REQUIRE(run("gen --config cli_gen3.cfg --out cli_corpus3.txt") == 0);
  CHECK(run("pretrain --config cli_train.cfg --corpus cli_corpus3.txt "
            "--out cli_x.bin") == 1);
}

TEST_CASE("pretraining is deterministic across runs") {
  write_file("cli_gen.cfg", kGenConfig);
  REQUIRE(run("gen --config cli_gen.cfg --out cli_corpus.txt") == 0);
  write_file("cli_train.cfg", kTrainConfig);
  REQUIRE(run("pretrain --config cli_train.cfg --corpus cli_corpus.txt "
              "--out cli_ckpt_a.bin") == 0);
  std::string report = last_stdout();
  REQUIRE(run("pretrain --config cli_train.cfg --corpus cli_corpus.txt "
              "--out cli_ckpt_b.bin") == 0);
  CHECK(last_stdout() == report);
  CHECK(read_file("cli_ckpt_a.bin") == read_file("cli_ckpt_b.bin"));
}
