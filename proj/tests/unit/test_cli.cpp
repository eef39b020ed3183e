#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <random>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "app/app.hpp"
#include "app/manifest.hpp"
#include "fixtures.hpp"
#include "synergy/errors.hpp"
#include "synergy/spectral.hpp"
#include "synergy/synthgen.hpp"

using namespace synergy;
namespace fs = std::filesystem;

namespace {

struct CliResult {
  int status;
  std::string out;
  std::string err;
};

CliResult cli(std::vector<std::string> args) {
  args.insert(args.begin(), "synergy");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int status = app::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {status, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::size_t lines(const std::string& s) { return std::count(s.begin(), s.end(), '\n'); }

fs::path synth_bundle(const fixture::TempDir& dir, std::size_t models, std::size_t n,
                      std::uint64_t seed = 42) {
  auto reg = generate(fixture::synth_spec(models, n, 0.4, 0.8, seed));
  write_registry_bundle(dir.path() / "reg", reg);
  return dir.path() / "reg" / "registry.json";
}

FeatureMapSet map_set(const std::function<float(std::size_t, std::size_t)>& f) {
  FeatureMapSet s;
  s.n_samples = 2;
  s.n_channels = 2;
  s.height = s.width = 16;
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t r = 0; r < 16; ++r)
      for (std::size_t c = 0; c < 16; ++c) s.data.push_back(f(r, c));
  return s;
}

FeatureMapSet low_pass() {
  return map_set([](std::size_t r, std::size_t) {
    return static_cast<float>(1.0 + std::cos(2 * std::numbers::pi * r / 16.0));
  });
}

FeatureMapSet white_noise() {
  std::mt19937_64 gen(6);
  std::normal_distribution<float> d;
  return map_set([&](std::size_t, std::size_t) { return 1.0f + d(gen); });
}

}  // namespace

TEST(CmdEvaluate, FifteenModelsGive455) {
  fixture::TempDir dir("ev15");
  app::RunConfig cfg;
  cfg.registry = synth_bundle(dir, 15, 200);
  cfg.out_dir = dir / "out";
  cfg.workers = 4;
  std::ostringstream log;
  auto summary = app::cmd_evaluate(cfg, log);
  EXPECT_EQ(summary.model_count, 15u);
  EXPECT_EQ(summary.combinations, 455u);
  EXPECT_NE(log.str().find("combinations: 455"), std::string::npos) << log.str();
  EXPECT_EQ(lines(slurp(dir / "out/sweep.csv")), 456u);
}

TEST(CmdEvaluate, SeventeenModelsGive680) {
  fixture::TempDir dir("ev17");
  app::RunConfig cfg;
  cfg.registry = synth_bundle(dir, 17, 100);
  cfg.out_dir = dir / "out";
  cfg.workers = 4;
  std::ostringstream log;
  EXPECT_EQ(app::cmd_evaluate(cfg, log).combinations, 680u);
}

TEST(CmdEvaluate, EightModelSmokeWritesEveryArtifact) {
  fixture::TempDir dir("ev8");
  app::RunConfig cfg;
  cfg.registry = synth_bundle(dir, 8, 2000);
  cfg.out_dir = dir / "out";
  std::ostringstream log;
  auto s = app::cmd_evaluate(cfg, log);
  ASSERT_TRUE(s.best);
  for (const char* f : {"sweep.csv", "sweep.json", "top_tables.csv", "pareto.csv",
                        "gain_vs_correlation.csv", "manifest.json"}) {
    EXPECT_TRUE(fs::exists(dir / "out" / f)) << f;
  }
  const auto top = slurp(dir / "out/top_tables.csv");
  EXPECT_EQ(top.substr(0, top.find('\n')),
            "group,rank,pattern,model_1,acc_1_pct,model_2,acc_2_pct,model_3,acc_3_pct,"
            "soft_acc_pct,acc_gain_pct,latency_s");
  EXPECT_EQ(lines(slurp(dir / "out/gain_vs_correlation.csv")), 57u);

  auto manifest = nlohmann::json::parse(slurp(dir / "out/manifest.json"));
  EXPECT_EQ(manifest["tool"], "synergy");
  EXPECT_EQ(manifest["version"], std::string(app::kToolVersion));
  EXPECT_EQ(manifest["command"], "evaluate");
  EXPECT_EQ(manifest["config"]["k"], 3);
  EXPECT_EQ(manifest["inputs"].size(), 10u);  // config + 8 score files + labels
  for (const auto& o : manifest["outputs"]) {
    EXPECT_EQ(o["sha256"], app::sha256_hex(dir / "out" / o["path"].get<std::string>()));
  }
}

TEST(CmdEvaluate, RerunIsByteIdentical) {
  fixture::TempDir dir("rerun");
  app::RunConfig cfg;
  cfg.registry = synth_bundle(dir, 6, 500);
  cfg.out_dir = dir / "out";
  std::ostringstream log;
  app::cmd_evaluate(cfg, log);
  std::map<std::string, std::string> first;
  for (const auto& e : fs::directory_iterator(cfg.out_dir)) {
    first[e.path().filename().string()] = slurp(e.path());
  }
  cfg.workers = 5;
  app::cmd_evaluate(cfg, log);
  for (const auto& [name, bytes] : first) {
    if (name == "manifest.json") continue;  // records the worker count
    EXPECT_EQ(slurp(cfg.out_dir / name), bytes) << name;
  }
  cfg.workers = 1;
  app::cmd_evaluate(cfg, log);
  EXPECT_EQ(slurp(cfg.out_dir / "manifest.json"), first["manifest.json"]);
}

TEST(CmdEvaluate, NoParetoWithoutLatency) {
  fixture::TempDir dir("nolat");
  app::RunConfig cfg;
  cfg.registry = synth_bundle(dir, 4, 100);
  cfg.out_dir = dir / "out";
  cfg.latency_mode = LatencyMode::kOff;
  cfg.write_json = false;
  std::ostringstream log;
  app::cmd_evaluate(cfg, log);
  EXPECT_FALSE(fs::exists(dir / "out/pareto.csv"));
  EXPECT_FALSE(fs::exists(dir / "out/sweep.json"));
  EXPECT_TRUE(fs::exists(dir / "out/sweep.csv"));
}

TEST(CmdEvaluate, ValidationErrors) {
  app::RunConfig cfg;
  cfg.registry = "/nonexistent/registry.json";
  std::ostringstream log;
  EXPECT_THROW(app::cmd_evaluate(cfg, log), ConfigError);
  fixture::TempDir dir("val");
  cfg.registry = synth_bundle(dir, 3, 50);
  cfg.k = 1;
  EXPECT_THROW(app::cmd_evaluate(cfg, log), ConfigError);
}

TEST(CmdCorrelate, ReportAndErrors) {
  fixture::TempDir dir("corr");
  app::RunConfig cfg;
  cfg.registry = synth_bundle(dir, 4, 3000);
  cfg.out_dir = dir / "out";
  std::ostringstream log;
  auto report = app::cmd_correlate(cfg, {"m0", "m1", "m2"}, log);
  ASSERT_TRUE(report.r_adjusted);
  auto doc = nlohmann::json::parse(slurp(dir / "out/correlation.json"));
  EXPECT_EQ(doc["n_filtered"], report.n_filtered);
  EXPECT_EQ(doc["r_multiple"].size(), 3u);
  EXPECT_EQ(doc["partial_correlation"].get<double>(), *report.r_adjusted);
  try {
    app::cmd_correlate(cfg, {"m0", "m1", "zz"}, log);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("m0, m1, m2, m3"), std::string::npos) << e.what();
  }
}

TEST(CmdCorrelate, IdenticalFilesAndPerfectModels) {
  fixture::TempDir dir("ident");
  auto reg = generate(fixture::synth_spec(1, 400, 0.0, 0.7, 3));
  write_binary(dir / "a.ensl", reg.model(0).scores);
  write_labels(dir / "labels.txt", reg.labels());
  RegistryConfig rc;
  rc.labels_path = dir / "labels.txt";
  for (const char* id : {"a", "b", "c"}) {
    ModelMeta m;
    m.id = m.display_name = id;
    m.source_path = (dir / "a.ensl").string();
    rc.models.push_back(m);
  }
  write_registry_config(dir / "same.json", rc);
  app::RunConfig cfg;
  cfg.registry = dir / "same.json";
  cfg.out_dir = dir / "out";
  std::ostringstream log;
  auto report = app::cmd_correlate(cfg, {"a", "b", "c"}, log);
  EXPECT_FALSE(report.r_adjusted);
  EXPECT_EQ(report.undefined_reason, "collinear");

  // one-hot scores on the label: nobody is ever wrong
  Matrix<double> perfect(reg.n_samples(), reg.n_classes(), 0.0);
  for (std::size_t i = 0; i < reg.n_samples(); ++i) perfect(i, reg.labels().labels[i]) = 1.0;
  write_binary(dir / "a.ensl", perfect);
  EXPECT_THROW(app::cmd_correlate(cfg, {"a", "b", "c"}, log), InsufficientSamplesError);
}

TEST(CmdSpectrum, ProfilesAndDistances) {
  fixture::TempDir dir("spectrum");
  FeatureMapSet impulse;
  impulse.n_samples = 1;
  impulse.n_channels = 1;
  impulse.height = impulse.width = 8;
  impulse.data.assign(64, 0.0f);
  impulse.data[10] = 1.0f;
  write_feature_maps(dir / "impulse.fmap", impulse);
  write_feature_maps(dir / "low.fmap", low_pass());
  write_feature_maps(dir / "low_copy.fmap", low_pass());
  write_feature_maps(dir / "high.fmap", white_noise());

  app::SpectrumConfig sc;
  sc.fmaps = {dir / "impulse.fmap"};
  sc.bins = 6;
  sc.out_dir = dir / "imp";
  std::ostringstream log;
  auto imp = app::cmd_spectrum(sc, log);
  for (const auto& v : imp[0].values) EXPECT_NEAR(*v, 0.0, 1e-12);

  sc.fmaps = {dir / "low.fmap", dir / "low_copy.fmap", dir / "high.fmap"};
  sc.out_dir = dir / "out";
  sc.bins = 8;
  auto profiles = app::cmd_spectrum(sc, log);
  ASSERT_EQ(profiles.size(), 3u);
  for (std::size_t b = 2; b < 8; ++b) EXPECT_LT(*profiles[0].values[b], *profiles[2].values[b]);
  EXPECT_EQ(profile_distance(profiles[0], profiles[1]), 0.0);
  EXPECT_GT(profile_distance(profiles[0], profiles[2]), 0.0);
  const auto dist = slurp(dir / "out/distances.csv");
  EXPECT_EQ(dist.substr(0, dist.find('\n')), "model,low,low_copy,high");
  EXPECT_NE(dist.find("\nlow,0,0,"), std::string::npos) << dist;
  EXPECT_TRUE(fs::exists(dir / "out/profile_high.csv"));
  EXPECT_TRUE(fs::exists(dir / "out/manifest.json"));
}

TEST(CmdSynth, WritesLoadableRegistryAndSeed) {
  fixture::TempDir dir("synth");
  app::SynthConfig sc;
  sc.models = 5;
  sc.samples = 300;
  sc.seed = 9;
  sc.out_dir = dir / "s";
  std::ostringstream log;
  app::cmd_synth(sc, log);
  auto reg = load_registry(dir / "s/registry.json");
  EXPECT_EQ(reg.size(), 5u);
  EXPECT_EQ(reg.attributes().at("seed"), "9");
  auto manifest = nlohmann::json::parse(slurp(dir / "s/manifest.json"));
  EXPECT_EQ(manifest["seed"], 9);
}

TEST(Cli, EndToEndThroughRun) {
  fixture::TempDir dir("run");
  const auto s = (dir / "syn").string();
  auto r = cli({"synth", "--models", "6", "--samples", "400", "--seed", "3", "--out", s});
  ASSERT_EQ(r.status, 0) << r.err;
  const auto reg = s + "/registry.json";
  r = cli({"evaluate", "--registry", reg, "--out", (dir / "ev").string(), "--workers", "2",
           "--latency-mode", "max", "--format", "csv"});
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_NE(r.out.find("combinations: 20"), std::string::npos);
  EXPECT_FALSE(fs::exists(dir / "ev/sweep.json"));

  r = cli({"rank", "--registry", reg, "--out", (dir / "rk").string(), "--top", "2", "--pattern",
           "CMT", "--key", "soft_acc"});
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir / "rk/ranked.csv"));

  r = cli({"correlate", "--registry", reg, "--ids", "m0,m1,m5", "--out", (dir / "co").string()});
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir / "co/correlation.json"));
}

TEST(Cli, ErrorsAreOneMachineParsableLine) {
  auto r = cli({"evaluate", "--registry", "/nonexistent.json"});
  EXPECT_EQ(r.status, 13);
  EXPECT_EQ(r.err.rfind("error: code=ConfigError exit=13 message=", 0), 0u) << r.err;
  EXPECT_EQ(lines(r.err), 1u);

  r = cli({"evaluate"});
  EXPECT_EQ(r.status, 2);
  EXPECT_EQ(r.err.rfind("error: code=UsageError exit=2", 0), 0u) << r.err;

  r = cli({"frobnicate"});
  EXPECT_EQ(r.status, 2);

  r = cli({"synth", "--rho", "1.5", "--out", "/tmp/unused-synergy"});
  EXPECT_EQ(r.status, 13) << r.err;

  r = cli({"--help"});
  EXPECT_EQ(r.status, 0);
  EXPECT_NE(r.out.find("evaluate"), std::string::npos);
}

TEST(Cli, EnvironmentOverridesFlags) {
  fixture::TempDir dir("env");
  const auto reg = synth_bundle(dir, 5, 200).string();
  ::setenv("SYNERGY_K", "2", 1);
  ::setenv("SYNERGY_REGISTRY", reg.c_str(), 1);
  auto r = cli({"evaluate", "--out", (dir / "ev").string()});
  ::unsetenv("SYNERGY_K");
  ::unsetenv("SYNERGY_REGISTRY");
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_NE(r.out.find("combinations: 10"), std::string::npos) << r.out;
}
