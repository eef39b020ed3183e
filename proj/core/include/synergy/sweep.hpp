#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "synergy/prediction_store.hpp"

namespace synergy {

using Combination = std::vector<std::size_t>;

std::uint64_t binomial(std::uint64_t n, std::uint64_t k) noexcept;

// All k-subsets of {0, ..., model_count-1} in lexicographic order.
// Throws ConfigError unless 2 <= k <= model_count.
std::vector<Combination> enumerate_combinations(std::size_t model_count, std::size_t k);

// Advances `combo` to its lexicographic successor; false after the last one.
bool next_combination(Combination& combo, std::size_t model_count) noexcept;

// Canonical multiset of member categories, letters sorted (e.g. "CMT").
class CategoryPattern {
 public:
  CategoryPattern() = default;
  explicit CategoryPattern(std::string letters);

  const std::string& str() const noexcept { return letters_; }
  std::size_t size() const noexcept { return letters_.size(); }
  bool homogeneous() const noexcept;

  friend auto operator<=>(const CategoryPattern&, const CategoryPattern&) = default;

 private:
  std::string letters_;
};

CategoryPattern classify_pattern(std::span<const ModelMeta> members);

enum class LatencyMode { kOff, kSum, kMax };
std::string_view latency_mode_name(LatencyMode mode) noexcept;
LatencyMode parse_latency_mode(std::string_view text);

struct SweepOptions {
  std::size_t k = 3;
  LatencyMode latency_mode = LatencyMode::kSum;
  // Missing member latency becomes a ConfigError instead of an absent value.
  bool require_latency = false;
  bool compute_correlation = true;  // only meaningful for k = 3
  std::size_t workers = 1;
};

struct EnsembleResult {
  Combination members;  // registry indices, ascending
  std::vector<std::string> member_ids;
  std::vector<std::string> display_names;
  std::vector<double> member_accs;
  double soft_acc = 0.0;
  double acc_gain = 0.0;
  CategoryPattern pattern;
  std::optional<double> latency_s;
  std::optional<double> partial_correlation;
  std::string correlation_note;  // reason when partial_correlation is absent
};

struct SweepResult {
  SweepOptions options;
  std::size_t model_count = 0;
  std::size_t n_samples = 0;
  std::vector<EnsembleResult> records;  // enumeration order
};

SweepResult run_sweep(const Registry& registry, const SweepOptions& options = {});

enum class RankKey { kAccGain, kSoftAcc };
std::string_view rank_key_name(RankKey key) noexcept;
RankKey parse_rank_key(std::string_view text);

// Descending by key, ties by member ids; optional pattern filter; clamped
// to `top` entries.
std::vector<EnsembleResult> rank(std::span<const EnsembleResult> results, RankKey key,
                                 std::size_t top,
                                 const std::optional<CategoryPattern>& pattern_filter = {});

// Records not dominated in the (latency, gain) plane, by latency ascending.
// Throws ConfigError if any record lacks a latency.
std::vector<EnsembleResult> pareto_frontier(std::span<const EnsembleResult> results);

// Machine CSV: full-precision fractions, one row per record.
void write_sweep_csv(std::ostream& out, const SweepResult& result);
// Same content as JSON.
void write_sweep_json(std::ostream& out, const SweepResult& result);

}  // namespace synergy
