#include <CLI11.hpp>

#include "app.hpp"
#include "synergy/errors.hpp"

namespace synergy::app {
namespace {

constexpr int kExitUsage = 2;
constexpr int kExitUnexpected = 1;

std::string env(const char* flag) { return std::string("SYNERGY_") + flag; }

// Flags shared by evaluate, correlate and rank, bound to string buffers that
// are converted after parsing.
struct RunFlags {
  std::string registry;
  std::string labels;
  std::size_t k = 3;
  std::string latency_mode = "sum";
  std::string scores_are;
  std::size_t workers = 1;
  std::string out = "out";
  std::vector<std::string> formats{"csv", "json"};
  std::size_t top = 5;
  std::string pattern;
  std::string key = "acc_gain";
  std::optional<std::uint64_t> seed;

  void attach(CLI::App* sub) {
    sub->add_option("--registry", registry, "Registry config (JSON)")
        ->required()
        ->envname(env("REGISTRY"));
    sub->add_option("--labels", labels, "Label file (overrides the config entry)")
        ->envname(env("LABELS"));
    sub->add_option("--k", k, "Ensemble size")->envname(env("K"));
    sub->add_option("--latency-mode", latency_mode, "sum | max | off")
        ->envname(env("LATENCY_MODE"));
    sub->add_option("--scores-are", scores_are, "logits | probs (default from registry)")
        ->envname(env("SCORES_ARE"));
    sub->add_option("--workers", workers, "Worker threads")->envname(env("WORKERS"));
    sub->add_option("--out", out, "Output directory")->envname(env("OUT"));
    sub->add_option("--format", formats, "Report formats: csv, json")
        ->delimiter(',')
        ->envname(env("FORMAT"));
    sub->add_option("--top", top, "Rows per ranked table")->envname(env("TOP"));
    sub->add_option("--pattern", pattern, "Category pattern filter, e.g. CMT")
        ->envname(env("PATTERN"));
    sub->add_option("--key", key, "Ranking key: acc_gain | soft_acc")->envname(env("KEY"));
    sub->add_option("--seed", seed, "Seed recorded in the manifest")->envname(env("SEED"));
  }

  RunConfig to_config() const {
    RunConfig c;
    c.registry = registry;
    if (!labels.empty()) c.labels = labels;
    c.k = k;
    c.latency_mode = parse_latency_mode(latency_mode);
    if (!scores_are.empty()) c.scores_are = parse_score_kind(scores_are);
    c.workers = workers;
    c.out_dir = out;
    c.write_csv = c.write_json = false;
    for (const auto& f : formats) {
      if (f == "csv") {
        c.write_csv = true;
      } else if (f == "json" || f == "structured-text") {
        c.write_json = true;
      } else {
        throw ConfigError("unknown report format '" + f + "' (expected csv or json)");
      }
    }
    c.top = top;
    if (!pattern.empty()) c.pattern = CategoryPattern(pattern);
    c.rank_key = parse_rank_key(key);
    c.seed = seed;
    return c;
  }
};

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Ensemble complementarity toolkit: softmax-fusion sweeps, error correlation, "
               "feature-map spectra."};
  app.name(std::string(kToolName));
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);

  RunFlags eval_flags, rank_flags, corr_flags;
  auto* evaluate = app.add_subcommand("evaluate", "Sweep every k-model ensemble and write reports");
  eval_flags.attach(evaluate);

  auto* rank_cmd = app.add_subcommand("rank", "Rank ensembles by acc_gain or soft_acc");
  rank_flags.attach(rank_cmd);

  auto* correlate = app.add_subcommand("correlate", "Partial correlation of one model triple");
  corr_flags.attach(correlate);
  std::vector<std::string> ids;
  correlate->add_option("--ids", ids, "Three model ids, comma separated")
      ->required()
      ->delimiter(',')
      ->envname(env("IDS"));

  SpectrumConfig spectrum_cfg;
  std::vector<std::string> fmaps;
  std::string order = "average-then-log";
  std::string spectrum_out = "out";
  auto* spectrum = app.add_subcommand("spectrum", "Relative log-amplitude profiles of feature maps");
  spectrum->add_option("--fmap", fmaps, "FMAP v1 file (repeatable)")
      ->required()
      ->envname(env("FMAP"));
  spectrum->add_option("--bins", spectrum_cfg.bins, "Radial bins")->envname(env("BINS"));
  spectrum->add_option("--order", order, "average-then-log | log-then-average")
      ->envname(env("ORDER"));
  spectrum->add_option("--workers", spectrum_cfg.workers, "Worker threads")
      ->envname(env("WORKERS"));
  spectrum->add_option("--out", spectrum_out, "Output directory")->envname(env("OUT"));

  SynthConfig synth_cfg;
  std::string synth_out = "synth";
  auto* synth = app.add_subcommand("synth", "Generate a synthetic registry");
  synth->add_option("--models", synth_cfg.models, "Model count")->envname(env("MODELS"));
  synth->add_option("--samples", synth_cfg.samples, "Sample count")->envname(env("SAMPLES"));
  synth->add_option("--classes", synth_cfg.classes, "Class count")->envname(env("CLASSES"));
  synth->add_option("--rho", synth_cfg.rho, "Latent error correlation in [0, 1)")
      ->envname(env("RHO"));
  synth->add_option("--acc", synth_cfg.acc, "Per-model accuracy in (0, 1)")->envname(env("ACC"));
  synth->add_option("--margin", synth_cfg.margin, "Logit confidence margin")
      ->envname(env("MARGIN"));
  synth->add_option("--seed", synth_cfg.seed, "RNG seed")->envname(env("SEED"));
  synth->add_option("--out", synth_out, "Output directory")->envname(env("OUT"));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      // --help / --version
      return app.exit(e, out, err);
    }
    err << "error: code=UsageError exit=" << kExitUsage << " message=" << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (*evaluate) {
      cmd_evaluate(eval_flags.to_config(), out);
    } else if (*rank_cmd) {
      cmd_rank(rank_flags.to_config(), out);
    } else if (*correlate) {
      cmd_correlate(corr_flags.to_config(), ids, out);
    } else if (*spectrum) {
      for (const auto& f : fmaps) spectrum_cfg.fmaps.emplace_back(f);
      if (order == "average-then-log") {
        spectrum_cfg.order = AveragingOrder::kAverageThenLog;
      } else if (order == "log-then-average") {
        spectrum_cfg.order = AveragingOrder::kLogThenAverage;
      } else {
        throw ConfigError("unknown --order '" + order + "'");
      }
      spectrum_cfg.out_dir = spectrum_out;
      cmd_spectrum(spectrum_cfg, out);
    } else if (*synth) {
      synth_cfg.out_dir = synth_out;
      cmd_synth(synth_cfg, out);
    }
  } catch (const Error& e) {
    err << "error: code=" << error_code_name(e.code()) << " exit=" << error_exit_status(e.code())
        << " message=" << e.what() << '\n';
    return error_exit_status(e.code());
  } catch (const std::exception& e) {
    err << "error: code=InternalError exit=" << kExitUnexpected << " message=" << e.what() << '\n';
    return kExitUnexpected;
  }
  return 0;
}

}  // namespace synergy::app
