#include <fstream>
#include <sstream>

#include "doctest.h"
#include "rareda/cli.hpp"
#include "rareda/evalviz.hpp"
#include "support/oracles.hpp"
#include "support/tempdir.hpp"

using namespace rareda;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code = 0;
  std::string out;
  std::string err;
};

Outcome invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "rareda");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void spit(const fs::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  out << s;
}

nlohmann::json read_json(const fs::path& p) {
  std::ifstream in(p);
  return nlohmann::json::parse(in);
}

// Small dataset and a fast config shared by the tests below.
struct Fixture {
  test::TempDir dir;
  fs::path data = dir / "data.csv";
  fs::path config = dir / "config.json";

  Fixture() {
    spit(dir / "spec.json", cli::to_json(oracle::small_spec(31)).dump());
    REQUIRE(invoke({"gen-data", "--spec", (dir / "spec.json").string(), "--out", data.string()}).code == 0);
    const nlohmann::json cfg{{"epochs", 3},        {"batch_size", 16},      {"feature_hidden", {8}},
                             {"feature_dim", 6},   {"classifier_hidden", {6}}, {"discriminator_hidden", {6}},
                             {"synthetic_count", 40}, {"oversample_factor", 5}};
    spit(config, cfg.dump());
  }
};

}  // namespace

TEST_CASE("gen-data: default benchmark has 41 rare train samples and reruns are byte identical") {
  test::TempDir dir;
  const auto a = invoke({"gen-data", "--out", (dir / "a.csv").string()});
  REQUIRE(a.code == 0);
  REQUIRE(invoke({"gen-data", "--out", (dir / "b.csv").string()}).code == 0);
  CHECK(slurp(dir / "a.csv") == slurp(dir / "b.csv"));
  const Dataset ds = load_csv(dir / "a.csv");
  CHECK(class_histogram(ds, Split::train)[ds.rare_class_id] == 41);
  CHECK(a.out.find("41") != std::string::npos);

  REQUIRE(invoke({"gen-data", "--out", (dir / "c.csv").string(), "--seed", "2"}).code == 0);
  CHECK(slurp(dir / "a.csv") != slurp(dir / "c.csv"));
}

TEST_CASE("gen-data: spec JSON round trip and field-named errors") {
  test::TempDir dir;
  const GenSpec spec = oracle::small_spec(8);
  const GenSpec back = cli::gen_spec_from_json(cli::to_json(spec));
  CHECK(back.hash() == spec.hash());

  spit(dir / "bad.json", R"({"class_count": 3, "noise_sigma": 1.0})");
  auto r = invoke({"gen-data", "--spec", (dir / "bad.json").string(), "--out", (dir / "x.csv").string()});
  CHECK(r.code != 0);
  CHECK(r.err.find("noise_sigma") != std::string::npos);

  spit(dir / "bad2.json", R"({"noise_scale": -2})");
  r = invoke({"gen-data", "--spec", (dir / "bad2.json").string(), "--out", (dir / "x.csv").string()});
  CHECK(r.code != 0);
  CHECK(r.err.find("noise_scale") != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "x.csv"));
}

TEST_CASE("train writes a complete, reproducible run directory") {
  Fixture fx;
  const fs::path run = fx.dir / "run";
  const auto r = invoke({"train", "--data", fx.data.string(), "--method", "deerdann", "--config",
                      fx.config.string(), "--out", run.string(), "--seed", "5"});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  for (const char* f : {"config.json", "run.json", "checkpoint.bin", "checkpoint.bin.json", "epochs.csv",
                        "selected_metrics.json", "train.log"}) {
    CHECK_MESSAGE(fs::exists(run / f), f);
  }
  const TrainConfig cfg = config_from_json(read_json(run / "config.json"));
  CHECK(cfg.method == Method::deerdann);
  CHECK(cfg.seed == 5);
  CHECK(cfg.epochs == 3);

  const Checkpoint cp = load_checkpoint(run / "checkpoint.bin");
  CHECK(cp.config_hash == cfg.hash());
  const auto sel = read_json(run / "selected_metrics.json");
  const Dataset ds = load_csv(fx.data);
  CHECK(cli::run_metrics_from_json(sel.at("metrics")) == evaluate_all(cp.params, ds));
  CHECK(sel.at("selected_epoch").get<std::size_t>() == cp.epoch);

  const std::string epochs = slurp(run / "epochs.csv");
  CHECK(epochs.rfind("epoch,classification_loss,domain_loss,coral_loss,total_loss,discriminator_accuracy,grl_scale", 0) == 0);
  CHECK(std::count(epochs.begin(), epochs.end(), '\n') == 4);
  const std::string hash = read_json(run / "run.json").at("dataset_hash");
  CHECK(std::stoull(hash, nullptr, 16) == cli::file_hash(fx.data));

  // rerun reproduces everything but the log
  const fs::path again = fx.dir / "again";
  REQUIRE(invoke({"train", "--data", fx.data.string(), "--method", "deerdann", "--config", fx.config.string(),
               "--out", again.string(), "--seed", "5"})
              .code == 0);
  for (const char* f : {"config.json", "checkpoint.bin", "epochs.csv", "selected_metrics.json"}) {
    CHECK_MESSAGE(slurp(run / f) == slurp(again / f), f);
  }
}

TEST_CASE("train rejects bad input with a non-zero exit code") {
  Fixture fx;
  auto r = invoke({"train", "--data", fx.data.string(), "--method", "dann", "--out", (fx.dir / "r").string()});
  CHECK(r.code != 0);
  r = invoke({"train", "--data", (fx.dir / "missing.csv").string(), "--method", "baseline", "--out",
           (fx.dir / "r").string()});
  CHECK(r.code != 0);
  spit(fx.dir / "bad.json", R"({"epochz": 3})");
  r = invoke({"train", "--data", fx.data.string(), "--method", "baseline", "--config", (fx.dir / "bad.json").string(),
           "--out", (fx.dir / "r").string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("epochz") != std::string::npos);

  r = invoke({"train", "--data", fx.data.string(), "--method", "baseline", "--config", fx.config.string(), "--lr",
           "1e300", "--out", (fx.dir / "div").string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("epoch") != std::string::npos);
}

TEST_CASE("sweep, compare and project end to end") {
  Fixture fx;
  const fs::path sw = fx.dir / "sweep";
  const auto s = invoke({"sweep", "--data", fx.data.string(), "--method", "deercoral", "--config", fx.config.string(),
                      "--counts", "0,40", "--seeds", "1", "--out", sw.string(), "--jobs", "2"});
  REQUIRE_MESSAGE(s.code == 0, s.err);
  CHECK(fs::exists(sw / "count_0_seed_1" / "checkpoint.bin"));
  CHECK(fs::exists(sw / "count_40_seed_1" / "checkpoint.bin"));
  const std::string curve = slurp(sw / "learning_curve.csv");
  CHECK(curve.rfind("count,seed,trans_rare_acc,trans_other_avg,cis_rare_acc,cis_other_avg\n", 0) == 0);
  CHECK(std::count(curve.begin(), curve.end(), '\n') == 3);

  // a sweep cell matches a standalone train run with the same settings
  const fs::path single = fx.dir / "single";
  REQUIRE(invoke({"train", "--data", fx.data.string(), "--method", "deercoral", "--config", fx.config.string(),
               "--synthetic-count", "40", "--seed", "1", "--out", single.string()})
              .code == 0);
  CHECK(slurp(single / "selected_metrics.json") == slurp(sw / "count_40_seed_1" / "selected_metrics.json"));

  const fs::path base = fx.dir / "base";
  REQUIRE(invoke({"train", "--data", fx.data.string(), "--method", "baseline", "--config", fx.config.string(),
               "--out", base.string()})
              .code == 0);
  const fs::path cmp = fx.dir / "cmp";
  const auto c = invoke({"compare", "--runs", base.string() + "," + single.string(), "--out", cmp.string()});
  REQUIRE_MESSAGE(c.code == 0, c.err);
  const ComparisonTable t = parse_comparison_csv(slurp(cmp / "comparison.csv"));
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0].name == "baseline");
  CHECK(t.rows[1].name == "deercoral");
  const auto sel = read_json(single / "selected_metrics.json");
  CHECK(t.rows[1] == comparison_row("deercoral", cli::run_metrics_from_json(sel.at("metrics"))));
  CHECK(slurp(cmp / "comparison.txt").find("trans rare") != std::string::npos);

  const fs::path prj = fx.dir / "prj";
  const auto p = invoke({"project", "--run", single.string(), "--data", fx.data.string(), "--out", prj.string()});
  REQUIRE_MESSAGE(p.code == 0, p.err);
  CHECK(p.out.find("bimodality score") != std::string::npos);
  const auto rows = read_scatter_csv(prj / "scatter.csv");
  const Dataset ds = load_csv(fx.data);
  CHECK(rows.size() == ds.indices(Split::trans_test).size() + 40);
  std::size_t syn = 0;
  for (const auto& r : rows) syn += r.domain == Domain::synthetic ? 1 : 0;
  CHECK(syn == 40);
  CHECK(fs::exists(prj / "scatter.svg"));
  CHECK(fs::exists(prj / "projection.json"));

  const auto bad = invoke({"project", "--run", (fx.dir / "nope").string(), "--data", fx.data.string(), "--out",
                        prj.string()});
  CHECK(bad.code != 0);
}

TEST_CASE("metrics JSON round trip") {
  const Dataset ds = generate(oracle::small_spec(2));
  const ModelParams p = init_model(NetworkSpec::defaults(ds.feature_dim, ds.class_count), 3);
  const RunMetrics m = evaluate_all(p, ds);
  CHECK(cli::run_metrics_from_json(cli::to_json(m)) == m);
}
