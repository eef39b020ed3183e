#include "synergy/synthgen.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "synergy/errors.hpp"
#include "synergy/text.hpp"

namespace synergy {
namespace {

// 10-point Gauss-Legendre nodes/weights on [-1, 1].
constexpr std::array<double, 5> kGlNodes{0.1488743389816312, 0.4333953941292472,
                                         0.6794095682990244, 0.8650633666889845,
                                         0.9739065285171717};
constexpr std::array<double, 5> kGlWeights{0.2955242247147529, 0.2692667193099963,
                                           0.2190863625159820, 0.1494513491505806,
                                           0.0666713443086881};

template <typename F>
double integrate(F&& f, double lo, double hi, int panels) {
  const double width = (hi - lo) / panels;
  double total = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double mid = lo + (p + 0.5) * width;
    const double half = 0.5 * width;
    double s = 0.0;
    for (std::size_t i = 0; i < kGlNodes.size(); ++i) {
      s += kGlWeights[i] * (f(mid - half * kGlNodes[i]) + f(mid + half * kGlNodes[i]));
    }
    total += s * half;
  }
  return total;
}

void validate(const SynthSpec& spec) {
  if (spec.n_samples < 1) throw ConfigError("synthetic registry needs n_samples >= 1");
  if (spec.n_classes < 2) throw ConfigError("synthetic registry needs n_classes >= 2");
  if (spec.models.empty()) throw ConfigError("synthetic registry needs at least one model");
  if (!(spec.pairwise_rho >= 0.0 && spec.pairwise_rho < 1.0)) {
    throw ConfigError("rho = " + format_exact(spec.pairwise_rho) +
                      " is infeasible; feasible range is [0, 1)");
  }
  for (std::size_t l = 0; l < spec.models.size(); ++l) {
    const double a = spec.models[l].accuracy;
    if (!(a > 0.0 && a < 1.0)) {
      throw ConfigError("model " + std::to_string(l) + " accuracy " + format_exact(a) +
                        " is infeasible; feasible range is (0, 1)");
    }
  }
  if (!(spec.confidence_margin > 0.0) || !std::isfinite(spec.confidence_margin)) {
    throw ConfigError("confidence_margin must be a positive finite number");
  }
  if (!(spec.logit_noise >= 0.0) || !std::isfinite(spec.logit_noise)) {
    throw ConfigError("logit_noise must be finite and >= 0");
  }
  if (spec.latency_range) {
    auto [lo, hi] = *spec.latency_range;
    if (!(lo >= 0.0 && hi >= lo && std::isfinite(hi))) {
      throw ConfigError("latency range must satisfy 0 <= lo <= hi");
    }
  }
}

std::string lower_name(Category c) {
  std::string s(category_name(c));
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  return s;
}

}  // namespace

double SynthRng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double SynthRng::normal() {
  if (spare_) {
    const double v = *spare_;
    spare_.reset();
    return v;
  }
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  return r * std::cos(theta);
}

std::uint64_t SynthRng::index(std::uint64_t n) {
  if (n <= 1) return 0;
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x = engine_();
  while (x >= limit) x = engine_();
  return x % n;
}

double normal_cdf(double x) noexcept {
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("normal quantile needs p in (0, 1)");
  // Acklam's rational approximation, then one Halley refinement step.
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double e = normal_cdf(x) - p;
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

double bivariate_normal_cdf(double a, double b, double rho) {
  if (!(rho >= -1.0 && rho <= 1.0)) throw DomainError("correlation outside [-1, 1]");
  if (rho >= 1.0) return normal_cdf(std::min(a, b));
  if (rho <= -1.0) return std::max(0.0, normal_cdf(a) - normal_cdf(-b));
  // Plackett: d/dr P = phi2(a, b; r). Substituting r = sin(t) removes the
  // 1/sqrt(1 - r^2) endpoint singularity.
  auto integrand = [a, b](double t) {
    const double s = std::sin(t);
    const double one_minus_s = 2.0 * std::pow(std::sin(std::numbers::pi / 4 - t / 2), 2);
    const double one_plus_s = 1.0 + s;
    const double d = a - b;
    return std::exp(-d * d / (2.0 * one_minus_s * one_plus_s) - a * b / one_plus_s);
  };
  const double upper = std::asin(rho);
  const double integral = upper == 0.0 ? 0.0 : integrate(integrand, 0.0, upper, 200);
  return normal_cdf(a) * normal_cdf(b) + integral / (2.0 * std::numbers::pi);
}

double correlation_target(double rho_latent, double acc_a, double acc_b) {
  if (!(acc_a > 0.0 && acc_a < 1.0 && acc_b > 0.0 && acc_b < 1.0)) {
    throw DomainError("accuracies must lie in (0, 1)");
  }
  const double ta = normal_quantile(acc_a);
  const double tb = normal_quantile(acc_b);
  const double pa = normal_cdf(ta);
  const double pb = normal_cdf(tb);
  const double p11 = bivariate_normal_cdf(ta, tb, rho_latent);
  return (p11 - pa * pb) / std::sqrt(pa * (1.0 - pa) * pb * (1.0 - pb));
}

Registry generate(const SynthSpec& spec) {
  validate(spec);
  const std::size_t n = spec.n_samples;
  const std::size_t k = spec.n_classes;
  const std::size_t m = spec.models.size();
  const double shared = std::sqrt(spec.pairwise_rho);
  const double own = std::sqrt(1.0 - spec.pairwise_rho);

  std::vector<double> thresholds(m);
  for (std::size_t l = 0; l < m; ++l) thresholds[l] = normal_quantile(spec.models[l].accuracy);

  SynthRng rng(spec.seed);
  std::vector<Matrix<double>> scores(m, Matrix<double>(n, k));
  LabelSet labels;
  labels.n_classes = k;
  labels.labels.resize(n);
  std::vector<double> logits(k);

  // Draw order per sample: label, shared factor, then per model: own factor,
  // wrong class (if wrong), k noise draws, lead jitter.
  for (std::size_t i = 0; i < n; ++i) {
    const auto label = static_cast<std::uint32_t>(rng.index(k));
    labels.labels[i] = label;
    const double g = rng.normal();
    for (std::size_t l = 0; l < m; ++l) {
      const double latent = shared * g + own * rng.normal();
      const bool correct = latent < thresholds[l];
      const std::size_t target = correct ? label : (label + 1 + rng.index(k - 1)) % k;
      for (auto& z : logits) z = spec.logit_noise * rng.normal();
      double runner_up = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < k; ++j) {
        if (j != target) runner_up = std::max(runner_up, logits[j]);
      }
      logits[target] = runner_up + spec.confidence_margin + spec.logit_noise * std::abs(rng.normal());
      auto row = scores[l].row(i);
      // stored as 32-bit floats on disk; round now so files and memory agree
      for (std::size_t j = 0; j < k; ++j) row[j] = static_cast<double>(static_cast<float>(logits[j]));
    }
  }

  std::vector<PredictionSet> preds;
  preds.reserve(m);
  for (std::size_t l = 0; l < m; ++l) {
    ModelMeta meta;
    meta.id = "m" + std::to_string(l);
    meta.display_name = meta.id + "-" + lower_name(spec.models[l].category);
    meta.category = spec.models[l].category;
    meta.source_path = "synthetic";
    preds.push_back(PredictionSet{std::move(meta), std::move(scores[l])});
  }
  if (spec.latency_range) {
    auto [lo, hi] = *spec.latency_range;
    for (auto& p : preds) p.meta.latency_s = lo + (hi - lo) * rng.uniform();
  }

  std::map<std::string, std::string> attributes{
      {"generator", std::string(SynthRng::kName)},
      {"seed", std::to_string(spec.seed)},
      {"rho", format_exact(spec.pairwise_rho)},
      {"confidence_margin", format_exact(spec.confidence_margin)},
      {"logit_noise", format_exact(spec.logit_noise)},
  };
  return build_registry(std::move(preds), std::move(labels), ScoreKind::kLogits,
                        std::move(attributes));
}

}  // namespace synergy
