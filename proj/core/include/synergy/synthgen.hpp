#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string_view>
#include <utility>
#include <vector>

#include "synergy/prediction_store.hpp"

namespace synergy {

// Portable random stream: std::mt19937_64 (fully specified by the standard)
// with explicit transforms, so the same seed gives the same draws on every
// platform and standard library.
class SynthRng {
 public:
  static constexpr std::string_view kName = "mt19937_64";

  explicit SynthRng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  // Uniform in [0, 1) with 53 random bits.
  double uniform();
  // Standard normal, Box-Muller (both variates used).
  double normal();
  // Uniform integer in [0, n), rejection sampled.
  std::uint64_t index(std::uint64_t n);

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

double normal_cdf(double x) noexcept;
// Inverse standard normal CDF for p in (0, 1).
double normal_quantile(double p);

struct SynthModelSpec {
  double accuracy = 0.8;
  Category category = Category::kCnn;
};

struct SynthSpec {
  std::size_t n_samples = 2000;
  std::size_t n_classes = 10;
  std::vector<SynthModelSpec> models;
  double pairwise_rho = 0.0;        // latent correlation in [0, 1)
  double confidence_margin = 2.0;   // lead of the emitted class over the runner-up
  double logit_noise = 0.2;         // scale of the per-class logit noise
  std::uint64_t seed = 0;
  // Latencies drawn uniformly from this range after all scores; none when unset.
  std::optional<std::pair<double, double>> latency_range = std::pair{0.005, 0.1};
};

// Builds a registry whose models are correct when the shared-factor latent
// sqrt(rho) g + sqrt(1 - rho) e_l falls below the accuracy quantile.
// Model ids are "m0", "m1", ...; display names carry the category.
// Throws ConfigError for infeasible parameters.
Registry generate(const SynthSpec& spec);

// Expected phi coefficient between two threshold indicators whose latent
// normals have correlation rho_latent.
double correlation_target(double rho_latent, double acc_a, double acc_b);

// P(U < a, V < b) for standard bivariate normal with correlation rho.
double bivariate_normal_cdf(double a, double b, double rho);

}  // namespace synergy
