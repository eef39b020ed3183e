#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "synergy/correlation.hpp"
#include "synergy/ensemble.hpp"
#include "synergy/errors.hpp"
#include "synergy/synthgen.hpp"

using namespace synergy;

namespace {

std::vector<double> to_double(const std::vector<std::uint8_t>& v) {
  return {v.begin(), v.end()};
}

// Scores whose top-1 equals `pred[i]`.
PredictionSet predicting(const std::string& id, const std::vector<std::uint32_t>& pred,
                         std::size_t k) {
  Matrix<double> s(pred.size(), k, 0.0);
  for (std::size_t i = 0; i < pred.size(); ++i) s(i, pred[i]) = 1.0;
  return fixture::make_model(id, std::move(s));
}

std::vector<const PredictionSet*> ptrs(const std::vector<PredictionSet>& v) {
  std::vector<const PredictionSet*> out;
  for (const auto& p : v) out.push_back(&p);
  return out;
}

}  // namespace

TEST(MistakeFilter, PerfectMembersGiveEmptySet) {
  LabelSet labels{{0, 1, 2, 1}, 3};
  std::vector<PredictionSet> m{predicting("a", labels.labels, 3), predicting("b", labels.labels, 3)};
  EXPECT_TRUE(mistake_filter(ptrs(m), labels).empty());
}

TEST(MistakeFilter, SingleMistake) {
  LabelSet labels{{0, 1, 2, 1, 0}, 3};
  auto wrong = labels.labels;
  wrong[3] = 2;
  std::vector<PredictionSet> m{predicting("a", labels.labels, 3), predicting("b", wrong, 3),
                               predicting("c", labels.labels, 3)};
  EXPECT_EQ(mistake_filter(ptrs(m), labels), (std::vector<std::size_t>{3}));
}

TEST(MistakeFilter, HandPlacedErrors) {
  LabelSet labels{{0, 1, 2, 0}, 3};
  std::vector<PredictionSet> m{predicting("a", {1, 1, 2, 0}, 3), predicting("b", {0, 1, 0, 0}, 3),
                               predicting("c", {2, 1, 2, 0}, 3)};
  EXPECT_EQ(mistake_filter(ptrs(m), labels), (std::vector<std::size_t>{0, 2}));
}

TEST(Pearson, Basics) {
  std::vector<double> a{1, 0, 1, 0}, b{1, 0, 0, 1}, c{2, 2, 2, 2};
  EXPECT_NEAR(*pearson(a, b), 0.0, 1e-15);
  EXPECT_DOUBLE_EQ(*pearson(a, a), 1.0);
  EXPECT_FALSE(pearson(a, c));
  std::vector<double> short_v{1, 2, 3};
  EXPECT_THROW(pearson(a, short_v), ShapeError);
  std::vector<double> one{1};
  EXPECT_THROW(pearson(one, one), ShapeError);
}

TEST(MultipleCorrelation, ClosedFormCases) {
  EXPECT_NEAR(multiple_correlation(0.5, 0.5, 0.0), 0.70711, 1e-5);
  EXPECT_EQ(multiple_correlation(0.0, 0.0, 0.3), 0.0);
  EXPECT_THROW(multiple_correlation(0.2, 0.3, 1.0), DegenerateError);
  EXPECT_THROW(multiple_correlation(0.2, 0.3, -1.0), DegenerateError);
  // (0.9, -0.9, 0.9) cannot come from a valid correlation matrix
  EXPECT_THROW(multiple_correlation(0.9, -0.9, 0.9), DomainError);
  EXPECT_THROW(multiple_correlation(1.5, 0.0, 0.0), DomainError);
}

TEST(AdjustedCorrelation, Cases) {
  EXPECT_EQ(adjusted_correlation(1.0, 50, 2), 1.0);
  EXPECT_EQ(adjusted_correlation(0.0, 10, 2), 0.0);
  // sqrt(1 - 0.64 * 99 / 97) = 0.588900775777499 (arbitrary-precision value)
  EXPECT_NEAR(adjusted_correlation(0.6, 100, 2), 0.5889007758, 1e-10);
  EXPECT_NEAR(adjusted_correlation(0.6, 100, 2), std::sqrt(1.0 - 0.64 * 99.0 / 97.0), 1e-15);
  EXPECT_THROW(adjusted_correlation(0.5, 3, 2), InsufficientSamplesError);
}

TEST(MultipleCorrelation, MatchesRegressionOracle) {
  std::mt19937_64 gen(404);
  int checked = 0;
  while (checked < 300) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(10, 60)(gen);
    std::bernoulli_distribution coin(std::uniform_real_distribution<double>(0.2, 0.8)(gen));
    std::vector<double> x(n), y(n), z(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = coin(gen);
      y[i] = coin(gen) ? x[i] : coin(gen);
      z[i] = coin(gen) ? y[i] : coin(gen);
    }
    auto rxy = pearson(x, y), rxz = pearson(x, z), ryz = pearson(y, z);
    auto r2 = oracle::regression_r2(x, y, z);
    if (!rxy || !rxz || !ryz || std::fabs(*rxy) >= 1.0 || !r2) continue;
    EXPECT_NEAR(multiple_correlation(*rxz, *ryz, *rxy), std::sqrt(std::max(0.0, *r2)), 1e-9);
    ++checked;
  }
}

TEST(Triple, IdenticalModelsAreCollinear) {
  auto reg = generate(fixture::synth_spec(1, 300, 0.0, 0.7, 5));
  std::vector<PredictionSet> m{reg.model(0), reg.model(0), reg.model(0)};
  m[1].meta.id = "b";
  m[2].meta.id = "c";
  auto report = triple_partial_correlation(ptrs(m), reg.labels());
  EXPECT_FALSE(report.r_adjusted);
  EXPECT_EQ(report.undefined_reason, "collinear");
}

TEST(Triple, PerfectModelsHaveTooFewSamples) {
  LabelSet labels{{0, 1, 2, 1, 0, 2}, 3};
  std::vector<PredictionSet> m{predicting("a", labels.labels, 3), predicting("b", labels.labels, 3),
                               predicting("c", labels.labels, 3)};
  EXPECT_THROW(triple_partial_correlation(ptrs(m), labels), InsufficientSamplesError);
}

TEST(Triple, NeedsThreeMembers) {
  LabelSet labels{{0, 1}, 2};
  std::vector<PredictionSet> m{predicting("a", {0, 1}, 2), predicting("b", {0, 1}, 2)};
  EXPECT_THROW(triple_partial_correlation(ptrs(m), labels), ConfigError);
}

TEST(Triple, ZeroVarianceMemberIsUndefined) {
  // x is right everywhere on the filtered set, y and z vary
  std::vector<std::uint8_t> x{1, 1, 1, 1, 1, 1}, y{0, 1, 0, 1, 0, 1}, z{1, 0, 0, 0, 1, 1};
  auto r = correlate_correctness(x, y, z);
  EXPECT_EQ(r.n_filtered, 5u);
  EXPECT_FALSE(r.r_adjusted);
  EXPECT_EQ(r.undefined_reason, "zero variance");
}

TEST(Triple, RangesAndPermutationSymmetry) {
  std::mt19937_64 gen(55);
  std::bernoulli_distribution coin(0.7);
  for (int t = 0; t < 200; ++t) {
    std::array<std::vector<std::uint8_t>, 3> v;
    for (auto& vec : v) {
      vec.resize(40);
      for (auto& b : vec) b = coin(gen);
    }
    CorrelationReport base;
    try {
      base = correlate_correctness(v[0], v[1], v[2]);
    } catch (const InsufficientSamplesError&) {
      continue;
    }
    if (!base.r_adjusted) continue;
    EXPECT_GE(*base.r_adjusted, 0.0);
    EXPECT_LE(*base.r_adjusted, 1.0);
    for (auto r : {base.r_xy, base.r_xz, base.r_yz}) {
      EXPECT_GE(*r, -1.0);
      EXPECT_LE(*r, 1.0);
    }
    const int perms[5][3] = {{0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
    for (const auto& p : perms) {
      auto other = correlate_correctness(v[p[0]], v[p[1]], v[p[2]]);
      ASSERT_TRUE(other.r_adjusted);
      EXPECT_NEAR(*other.r_adjusted, *base.r_adjusted, 1e-12);
    }
  }
}

// The mistake filter conditions on "someone is wrong", so the expected
// statistic is the filtered one, computed by quadrature in the oracle.
TEST(Triple, SynthTripleMatchesAnalyticExpectation) {
  for (double rho : {0.0, 0.5}) {
    auto reg = generate(fixture::synth_spec(3, 5000, rho, 0.8, 1234));
    std::vector<const PredictionSet*> m{&reg.model(0), &reg.model(1), &reg.model(2)};
    auto report = triple_partial_correlation(m, reg.labels());
    const auto expected = oracle::expected_triple(rho, 0.8, 5000);
    ASSERT_TRUE(report.r_adjusted);
    EXPECT_NEAR(*report.r_adjusted, expected.r_adjusted, 0.1) << "rho " << rho;
    EXPECT_NEAR(static_cast<double>(report.n_filtered) / 5000.0, 1.0 - expected.p_all_correct,
                0.03);
  }
}

TEST(Triple, EvaluatorCorrectnessFeedsSamePipeline) {
  auto reg = generate(fixture::synth_spec(3, 800, 0.3, 0.75, 9));
  EnsembleEvaluator ev(reg);
  auto a = correlate_correctness(ev.correctness(0), ev.correctness(1), ev.correctness(2));
  std::vector<const PredictionSet*> m{&reg.model(0), &reg.model(1), &reg.model(2)};
  auto b = triple_partial_correlation(m, reg.labels());
  EXPECT_EQ(a.r_adjusted, b.r_adjusted);
  EXPECT_EQ(a.n_filtered, b.n_filtered);
  EXPECT_EQ(to_double(ev.correctness(0)).size(), 800u);
}
