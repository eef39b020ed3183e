#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "synergy/correlation.hpp"
#include "synergy/prediction_store.hpp"
#include "synergy/spectral.hpp"
#include "synergy/sweep.hpp"

namespace synergy::app {

inline constexpr std::string_view kToolName = "synergy";
inline constexpr std::string_view kToolVersion = "0.3.0";

struct RunConfig {
  std::filesystem::path registry;
  std::optional<std::filesystem::path> labels;
  std::size_t k = 3;
  LatencyMode latency_mode = LatencyMode::kSum;
  std::optional<ScoreKind> scores_are;  // registry config value when unset
  std::size_t workers = 1;
  std::filesystem::path out_dir = "out";
  bool write_csv = true;
  bool write_json = true;
  std::size_t top = 5;
  std::optional<CategoryPattern> pattern;
  RankKey rank_key = RankKey::kAccGain;
  std::optional<std::uint64_t> seed;  // recorded in the manifest only

  // Throws ConfigError when paths are missing or values out of range.
  void validate() const;
};

struct EvaluateSummary {
  std::size_t model_count = 0;
  std::size_t combinations = 0;
  std::optional<EnsembleResult> best;
  std::vector<std::filesystem::path> artifacts;
};

EvaluateSummary cmd_evaluate(const RunConfig& config, std::ostream& log);

CorrelationReport cmd_correlate(const RunConfig& config, const std::vector<std::string>& ids,
                                std::ostream& log);

struct SpectrumConfig {
  std::vector<std::filesystem::path> fmaps;
  std::size_t bins = 20;
  AveragingOrder order = AveragingOrder::kAverageThenLog;
  std::size_t workers = 1;
  std::filesystem::path out_dir = "out";
};

std::vector<SpectralProfile> cmd_spectrum(const SpectrumConfig& config, std::ostream& log);

struct SynthConfig {
  std::size_t models = 8;
  std::size_t samples = 2000;
  std::size_t classes = 10;
  double rho = 0.4;
  double acc = 0.8;
  double margin = 2.0;
  std::uint64_t seed = 42;
  std::filesystem::path out_dir = "synth";
};

void cmd_synth(const SynthConfig& config, std::ostream& log);

std::vector<EnsembleResult> cmd_rank(const RunConfig& config, std::ostream& log);

// Human table: percentages with 2 decimals. The header is written once,
// then one block of rows per group.
void write_ranked_header(std::ostream& out, std::size_t k);
void write_ranked_table(std::ostream& out, const std::string& group,
                        const std::vector<EnsembleResult>& rows, std::size_t k);

// Full CLI. Returns the process exit status; errors go to `err` as one line
// "error: code=<Name> exit=<status> message=<text>".
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace synergy::app
