#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "synergy/correlation.hpp"
#include "synergy/ensemble.hpp"
#include "synergy/errors.hpp"
#include "synergy/sweep.hpp"
#include "synergy/synthgen.hpp"

using namespace synergy;

namespace {

std::vector<double> correctness(const EnsembleEvaluator& ev, std::size_t m) {
  const auto& c = ev.correctness(m);
  return {c.begin(), c.end()};
}

}  // namespace

TEST(SynthRng, EngineIsStandardMt19937_64) {
  SynthRng rng(5489);
  std::uint64_t v = 0;
  for (int i = 0; i < 10000; ++i) v = rng.next_u64();
  EXPECT_EQ(v, 9981545732273789042ull);
}

TEST(SynthRng, TransformsStayInRange) {
  SynthRng rng(7);
  double sum = 0, sq = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    const auto k = rng.index(7);
    ASSERT_LT(k, 7u);
    const double z = rng.normal();
    sum += z;
    sq += z * z;
  }
  EXPECT_NEAR(sum / n, 0.0, 0.01);
  EXPECT_NEAR(sq / n, 1.0, 0.02);
  EXPECT_EQ(rng.index(1), 0u);
}

TEST(NormalFunctions, QuantileInvertsCdf) {
  for (double p : {1e-10, 1e-4, 0.01, 0.02425, 0.2, 0.5, 0.8, 0.97575, 0.999, 1 - 1e-9}) {
    EXPECT_NEAR(normal_cdf(normal_quantile(p)), p, 1e-14 + 1e-12 * p) << p;
  }
  EXPECT_NEAR(normal_quantile(0.8), 0.8416212335729143, 1e-12);
  EXPECT_THROW(normal_quantile(0.0), DomainError);
  EXPECT_THROW(normal_quantile(1.0), DomainError);
}

TEST(BivariateNormal, OrthantIdentity) {
  // P(U < 0, V < 0) = 1/4 + asin(rho) / (2 pi)
  for (double rho : {-0.95, -0.5, 0.0, 0.3, 0.7, 0.99}) {
    EXPECT_NEAR(bivariate_normal_cdf(0, 0, rho), 0.25 + std::asin(rho) / (2 * std::numbers::pi),
                1e-12)
        << rho;
  }
  EXPECT_NEAR(bivariate_normal_cdf(0.5, -0.3, 0.0), normal_cdf(0.5) * normal_cdf(-0.3), 1e-15);
  EXPECT_NEAR(bivariate_normal_cdf(0.4, 1.1, 1.0), normal_cdf(0.4), 1e-15);
}

TEST(CorrelationTarget, Anchors) {
  EXPECT_NEAR(correlation_target(0.0, 0.8, 0.6), 0.0, 1e-14);
  EXPECT_NEAR(correlation_target(1.0, 0.8, 0.8), 1.0, 1e-12);
  const double mc = oracle::monte_carlo_phi(0.5, 0.8, 0.8, 1'000'000, 99);
  EXPECT_NEAR(correlation_target(0.5, 0.8, 0.8), mc, 0.01);
  EXPECT_THROW(correlation_target(0.5, 0.0, 0.8), DomainError);
}

TEST(CorrelationTarget, MonotoneInRho) {
  double prev = -1;
  for (double rho = 0.0; rho < 1.0; rho += 0.05) {
    const double t = correlation_target(rho, 0.7, 0.85);
    EXPECT_GT(t, prev);
    prev = t;
  }
}

TEST(Generate, Deterministic) {
  auto spec = fixture::synth_spec(4, 300, 0.4, 0.8, 42);
  auto a = generate(spec);
  auto b = generate(spec);
  for (std::size_t m = 0; m < a.size(); ++m) {
    EXPECT_EQ(a.model(m).scores, b.model(m).scores);
    EXPECT_EQ(a.model(m).meta, b.model(m).meta);
  }
  EXPECT_EQ(a.labels().labels, b.labels().labels);

  fixture::TempDir d1("g1"), d2("g2");
  write_registry_bundle(d1.path(), a);
  write_registry_bundle(d2.path(), b);
  for (const char* f : {"m0.ensl", "m3.ensl", "labels.txt", "registry.json"}) {
    EXPECT_EQ(read_file_bytes(d1 / f), read_file_bytes(d2 / f)) << f;
  }
  spec.seed = 43;
  EXPECT_NE(generate(spec).model(0).scores, a.model(0).scores);
}

TEST(Generate, MetadataAndShape) {
  auto reg = generate(fixture::synth_spec(3, 50, 0.25, 0.8, 7, 4));
  EXPECT_EQ(reg.n_samples(), 50u);
  EXPECT_EQ(reg.n_classes(), 4u);
  EXPECT_EQ(reg.ids(), (std::vector<std::string>{"m0", "m1", "m2"}));
  EXPECT_EQ(reg.model(1).meta.category, Category::kTransformer);
  EXPECT_EQ(reg.attributes().at("generator"), "mt19937_64");
  EXPECT_EQ(reg.attributes().at("seed"), "7");
  EXPECT_EQ(reg.attributes().at("rho"), "0.25");
  for (const auto& m : reg.models()) {
    ASSERT_TRUE(m.meta.latency_s);
    EXPECT_GE(*m.meta.latency_s, 0.005);
    EXPECT_LE(*m.meta.latency_s, 0.1);
  }
}

TEST(Generate, InfeasibleParameters) {
  auto spec = fixture::synth_spec(2, 10, 1.0, 0.8, 1);
  try {
    generate(spec);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("[0, 1)"), std::string::npos) << e.what();
  }
  spec = fixture::synth_spec(2, 10, 0.2, 1.0, 1);
  EXPECT_THROW(generate(spec), ConfigError);
  spec = fixture::synth_spec(2, 10, 0.2, 0.8, 1, 1);
  EXPECT_THROW(generate(spec), ConfigError);
  spec = fixture::synth_spec(2, 10, 0.2, 0.8, 1);
  spec.confidence_margin = 0.0;
  EXPECT_THROW(generate(spec), ConfigError);
}

TEST(Generate, IndependentModelsHitTargets) {
  auto reg = generate(fixture::synth_spec(4, 10000, 0.0, 0.8, 2));
  EnsembleEvaluator ev(reg);
  for (std::size_t m = 0; m < 4; ++m) EXPECT_NEAR(ev.accuracy(m), 0.8, 0.02);
  for (std::size_t a = 0; a < 4; ++a)
    for (std::size_t b = a + 1; b < 4; ++b)
      EXPECT_NEAR(*pearson(correctness(ev, a), correctness(ev, b)), 0.0, 0.05);
}

TEST(Generate, AccuracyConcentratesAcrossSeeds) {
  int pass = 0, total = 0;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    auto spec = fixture::synth_spec(5, 2000, 0.3, 0.0, seed);
    const double accs[] = {0.55, 0.7, 0.8, 0.9, 0.97};
    for (std::size_t m = 0; m < 5; ++m) spec.models[m].accuracy = accs[m];
    auto reg = generate(spec);
    for (std::size_t m = 0; m < 5; ++m) {
      const double a = accs[m];
      const double realized = standalone_accuracy(reg.model(m), reg.labels());
      pass += std::fabs(realized - a) < 4 * std::sqrt(a * (1 - a) / 2000.0);
      ++total;
    }
  }
  EXPECT_GE(pass, total * 99 / 100);
}

TEST(Generate, RealizedCorrelationTracksTargetAndIsMonotone) {
  double prev = -1;
  for (double rho : {0.0, 0.2, 0.4, 0.6, 0.8}) {
    auto reg = generate(fixture::synth_spec(2, 20000, rho, 0.8, 77));
    EnsembleEvaluator ev(reg);
    const double r = *pearson(correctness(ev, 0), correctness(ev, 1));
    EXPECT_GE(r, prev) << rho;
    EXPECT_NEAR(r, correlation_target(rho, 0.8, 0.8), 0.03) << rho;
    prev = r;
  }
}

// Shared mistakes cannot be repaired by fusion.
TEST(Generate, HighRhoLeavesLittleGain) {
  auto hi = run_sweep(generate(fixture::synth_spec(6, 5000, 0.9, 0.8, 3)));
  auto lo = run_sweep(generate(fixture::synth_spec(6, 5000, 0.0, 0.8, 3)));
  double hi_mean = 0, lo_mean = 0;
  for (const auto& r : hi.records) hi_mean += r.acc_gain / hi.records.size();
  for (const auto& r : lo.records) lo_mean += r.acc_gain / lo.records.size();
  EXPECT_LT(hi_mean, 0.03);
  EXPECT_GT(lo_mean, 3 * hi_mean);
}
