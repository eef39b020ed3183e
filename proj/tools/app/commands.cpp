#include <algorithm>
#include <fstream>
#include <functional>
#include <map>
#include <set>

#include "app.hpp"
#include "manifest.hpp"
#include "synergy/errors.hpp"
#include "synergy/synthgen.hpp"
#include "synergy/text.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace synergy::app {
namespace {

fs::path write_artifact(const fs::path& path, const std::function<void(std::ostream&)>& body) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  body(out);
  out.flush();
  if (!out) throw IoError("write failed: " + path.string());
  return path;
}

std::string percent(double fraction) { return format_fixed(100.0 * fraction, 2); }

ordered_json optional_json(const std::optional<double>& v) {
  return v ? ordered_json(*v) : ordered_json(nullptr);
}

ordered_json run_config_json(const RunConfig& c, ScoreKind effective_kind) {
  ordered_json j;
  j["registry"] = c.registry.string();
  j["labels"] = c.labels ? ordered_json(c.labels->string()) : ordered_json(nullptr);
  j["k"] = c.k;
  j["latency_mode"] = std::string(latency_mode_name(c.latency_mode));
  j["scores_are"] = std::string(score_kind_name(effective_kind));
  j["workers"] = c.workers;
  j["top"] = c.top;
  j["pattern"] = c.pattern ? ordered_json(c.pattern->str()) : ordered_json(nullptr);
  j["rank_key"] = std::string(rank_key_name(c.rank_key));
  std::vector<std::string> formats;
  if (c.write_csv) formats.emplace_back("csv");
  if (c.write_json) formats.emplace_back("json");
  j["formats"] = formats;
  return j;
}

struct LoadedRegistry {
  Registry registry;
  std::vector<fs::path> inputs;
};

LoadedRegistry load(const RunConfig& config) {
  config.validate();
  auto cfg = load_registry_config(config.registry);
  auto registry = load_registry(config.registry, config.labels, config.scores_are);
  std::vector<fs::path> inputs{config.registry};
  if (config.labels) {
    inputs.push_back(*config.labels);
  } else if (cfg.labels_path) {
    inputs.push_back(*cfg.labels_path);
  }
  for (const auto& m : registry.models()) inputs.emplace_back(m.meta.source_path);
  return {std::move(registry), std::move(inputs)};
}

SweepOptions sweep_options(const RunConfig& config) {
  SweepOptions o;
  o.k = config.k;
  o.latency_mode = config.latency_mode;
  o.compute_correlation = true;
  o.workers = config.workers;
  return o;
}

void write_pareto_csv(std::ostream& out, const std::vector<EnsembleResult>& frontier) {
  CsvWriter csv(out);
  csv.row({"member_ids", "display_names", "pattern", "latency_s", "acc_gain", "soft_acc"});
  for (const auto& r : frontier) {
    csv.row({join(r.member_ids, ";"), join(r.display_names, ";"), r.pattern.str(),
             format_exact(*r.latency_s), format_exact(r.acc_gain), format_exact(r.soft_acc)});
  }
}

void write_gain_vs_correlation_csv(std::ostream& out, const SweepResult& sweep) {
  CsvWriter csv(out);
  csv.row({"member_ids", "pattern", "partial_correlation", "acc_gain", "note"});
  for (const auto& r : sweep.records) {
    csv.row({join(r.member_ids, ";"), r.pattern.str(),
             r.partial_correlation ? format_exact(*r.partial_correlation) : std::string(),
             format_exact(r.acc_gain), r.correlation_note});
  }
}

std::string describe(const EnsembleResult& r) {
  return join(r.display_names, " + ") + " [" + r.pattern.str() + "] soft_acc=" +
         percent(r.soft_acc) + "% acc_gain=" + percent(r.acc_gain) + "%";
}

}  // namespace

void RunConfig::validate() const {
  if (registry.empty() || !fs::exists(registry)) {
    throw ConfigError("registry config not found: '" + registry.string() + "'");
  }
  if (labels && !fs::exists(*labels)) {
    throw ConfigError("labels file not found: '" + labels->string() + "'");
  }
  if (k < 2) throw ConfigError("k must be >= 2");
  if (workers < 1) throw ConfigError("workers must be >= 1");
  if (top < 1) throw ConfigError("top must be >= 1");
  if (!write_csv && !write_json) throw ConfigError("at least one report format is required");
}

void write_ranked_table(std::ostream& out, const std::string& group,
                        const std::vector<EnsembleResult>& rows, std::size_t k) {
  CsvWriter csv(out);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    std::vector<std::string> row{group, std::to_string(i + 1), r.pattern.str()};
    for (std::size_t m = 0; m < k; ++m) {
      row.push_back(m < r.display_names.size() ? r.display_names[m] : "");
      row.push_back(m < r.member_accs.size() ? percent(r.member_accs[m]) : "");
    }
    row.push_back(percent(r.soft_acc));
    row.push_back(percent(r.acc_gain));
    row.push_back(r.latency_s ? format_fixed(*r.latency_s, 3) : "");
    csv.row(row);
  }
}

void write_ranked_header(std::ostream& out, std::size_t k) {
  std::vector<std::string> header{"group", "rank", "pattern"};
  for (std::size_t m = 1; m <= k; ++m) {
    header.push_back("model_" + std::to_string(m));
    header.push_back("acc_" + std::to_string(m) + "_pct");
  }
  header.insert(header.end(), {"soft_acc_pct", "acc_gain_pct", "latency_s"});
  CsvWriter(out).row(header);
}

EvaluateSummary cmd_evaluate(const RunConfig& config, std::ostream& log) {
  auto [registry, inputs] = load(config);
  const auto sweep = run_sweep(registry, sweep_options(config));
  fs::create_directories(config.out_dir);

  EvaluateSummary summary;
  summary.model_count = registry.size();
  summary.combinations = sweep.records.size();
  auto& artifacts = summary.artifacts;

  if (config.write_csv) {
    artifacts.push_back(write_artifact(config.out_dir / "sweep.csv",
                                       [&](std::ostream& o) { write_sweep_csv(o, sweep); }));
  }
  if (config.write_json) {
    artifacts.push_back(write_artifact(config.out_dir / "sweep.json",
                                       [&](std::ostream& o) { write_sweep_json(o, sweep); }));
  }

  // Overall top-N, then top-N per category pattern.
  std::set<CategoryPattern> patterns;
  for (const auto& r : sweep.records) patterns.insert(r.pattern);
  artifacts.push_back(write_artifact(config.out_dir / "top_tables.csv", [&](std::ostream& o) {
    write_ranked_header(o, config.k);
    write_ranked_table(o, "all", rank(sweep.records, config.rank_key, config.top), config.k);
    for (const auto& p : patterns) {
      write_ranked_table(o, p.str(), rank(sweep.records, config.rank_key, config.top, p),
                         config.k);
    }
  }));

  const bool all_latency = std::all_of(sweep.records.begin(), sweep.records.end(),
                                       [](const auto& r) { return r.latency_s.has_value(); });
  if (all_latency && !sweep.records.empty()) {
    const auto frontier = pareto_frontier(sweep.records);
    artifacts.push_back(write_artifact(config.out_dir / "pareto.csv",
                                       [&](std::ostream& o) { write_pareto_csv(o, frontier); }));
  } else {
    log << "note: latency unavailable (mode " << latency_mode_name(config.latency_mode)
        << "), pareto.csv skipped\n";
  }

  if (config.k == 3) {
    artifacts.push_back(
        write_artifact(config.out_dir / "gain_vs_correlation.csv",
                       [&](std::ostream& o) { write_gain_vs_correlation_csv(o, sweep); }));
  }

  Manifest manifest("evaluate", run_config_json(config, registry.score_kind()));
  if (config.seed) manifest.set_seed(*config.seed);
  for (const auto& p : inputs) manifest.add_input(p);
  for (const auto& p : artifacts) manifest.add_output(p);
  artifacts.push_back(manifest.write(config.out_dir));

  const auto best = rank(sweep.records, RankKey::kAccGain, 1);
  if (!best.empty()) summary.best = best.front();

  log << "models: " << summary.model_count << '\n'
      << "combinations: " << summary.combinations << '\n';
  if (summary.best) log << "best: " << describe(*summary.best) << '\n';
  log << "artifacts: " << config.out_dir.string() << '\n';
  return summary;
}

std::vector<EnsembleResult> cmd_rank(const RunConfig& config, std::ostream& log) {
  auto [registry, inputs] = load(config);
  const auto sweep = run_sweep(registry, sweep_options(config));
  auto ranked = rank(sweep.records, config.rank_key, config.top, config.pattern);
  fs::create_directories(config.out_dir);
  const std::string group = config.pattern ? config.pattern->str() : "all";
  auto path = write_artifact(config.out_dir / "ranked.csv", [&](std::ostream& o) {
    write_ranked_header(o, config.k);
    write_ranked_table(o, group, ranked, config.k);
  });
  Manifest manifest("rank", run_config_json(config, registry.score_kind()));
  if (config.seed) manifest.set_seed(*config.seed);
  for (const auto& p : inputs) manifest.add_input(p);
  manifest.add_output(path);
  manifest.write(config.out_dir);

  log << "top " << ranked.size() << " by " << rank_key_name(config.rank_key) << " (" << group
      << ", " << sweep.records.size() << " combinations)\n";
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    log << "  " << (i + 1) << ". " << describe(ranked[i]) << '\n';
  }
  return ranked;
}

CorrelationReport cmd_correlate(const RunConfig& config, const std::vector<std::string>& ids,
                                std::ostream& log) {
  auto [registry, inputs] = load(config);
  if (ids.size() != 3) {
    throw ConfigError("correlate needs exactly 3 model ids, got " + std::to_string(ids.size()));
  }
  std::vector<const PredictionSet*> members;
  for (const auto& id : ids) {
    auto idx = registry.find(id);
    if (!idx) {
      throw ConfigError("unknown model id '" + id + "'; valid ids: " + join(registry.ids(), ", "));
    }
    members.push_back(&registry.model(*idx));
  }
  const auto report = triple_partial_correlation(members, registry.labels());

  ordered_json doc;
  doc["members"] = ids;
  doc["n_filtered"] = report.n_filtered;
  doc["r_xy"] = optional_json(report.r_xy);
  doc["r_xz"] = optional_json(report.r_xz);
  doc["r_yz"] = optional_json(report.r_yz);
  doc["r_multiple"] = ordered_json::array();
  doc["r_adjusted_each"] = ordered_json::array();
  for (std::size_t i = 0; i < 3; ++i) {
    doc["r_multiple"].push_back(optional_json(report.r_multiple[i]));
    doc["r_adjusted_each"].push_back(optional_json(report.r_adjusted_each[i]));
  }
  doc["partial_correlation"] = optional_json(report.r_adjusted);
  doc["undefined_reason"] =
      report.undefined_reason.empty() ? ordered_json(nullptr) : ordered_json(report.undefined_reason);

  fs::create_directories(config.out_dir);
  auto path = write_artifact(config.out_dir / "correlation.json",
                             [&](std::ostream& o) { o << doc.dump(2) << '\n'; });
  auto cfg_json = run_config_json(config, registry.score_kind());
  cfg_json["ids"] = ids;
  Manifest manifest("correlate", cfg_json);
  for (const auto& p : inputs) manifest.add_input(p);
  manifest.add_output(path);
  manifest.write(config.out_dir);

  log << "members: " << join(ids, ", ") << '\n' << "filtered samples: " << report.n_filtered << '\n';
  if (report.r_adjusted) {
    log << "partial correlation: " << format_fixed(*report.r_adjusted, 6) << '\n';
  } else {
    log << "partial correlation: undefined (" << report.undefined_reason << ")\n";
  }
  return report;
}

std::vector<SpectralProfile> cmd_spectrum(const SpectrumConfig& config, std::ostream& log) {
  if (config.fmaps.empty()) throw ConfigError("spectrum needs at least one --fmap file");
  if (config.bins < 2) throw ConfigError("bins must be >= 2");
  std::vector<std::string> ids;
  std::set<std::string> seen;
  for (const auto& p : config.fmaps) {
    if (!fs::exists(p)) throw ConfigError("feature map file not found: '" + p.string() + "'");
    auto id = p.stem().string();
    if (!seen.insert(id).second) throw ConfigError("duplicate feature map name '" + id + "'");
    ids.push_back(id);
  }

  ProfileOptions opts;
  opts.n_bins = config.bins;
  opts.order = config.order;
  opts.workers = config.workers;

  fs::create_directories(config.out_dir);
  std::vector<SpectralProfile> profiles;
  std::vector<fs::path> outputs;
  for (std::size_t i = 0; i < config.fmaps.size(); ++i) {
    const auto maps = load_feature_maps(config.fmaps[i], ids[i]);
    profiles.push_back(profile_model(maps, opts));
    outputs.push_back(write_artifact(config.out_dir / ("profile_" + ids[i] + ".csv"),
                                     [&](std::ostream& o) { write_profile_csv(o, profiles.back()); }));
  }

  std::size_t undefined = 0;
  outputs.push_back(write_artifact(config.out_dir / "distances.csv", [&](std::ostream& o) {
    CsvWriter csv(o);
    std::vector<std::string> header{"model"};
    header.insert(header.end(), ids.begin(), ids.end());
    csv.row(header);
    for (std::size_t a = 0; a < profiles.size(); ++a) {
      std::vector<std::string> row{ids[a]};
      for (std::size_t b = 0; b < profiles.size(); ++b) {
        try {
          row.push_back(format_exact(profile_distance(profiles[a], profiles[b])));
        } catch (const DataError&) {
          row.emplace_back();
          ++undefined;
        }
      }
      csv.row(row);
    }
  }));
  if (undefined) {
    log << "note: " << undefined
        << " distance cells left empty (profiles have empty bins; use fewer --bins)\n";
  }

  ordered_json cfg;
  cfg["bins"] = config.bins;
  cfg["order"] = config.order == AveragingOrder::kAverageThenLog ? "average-then-log"
                                                                  : "log-then-average";
  cfg["workers"] = config.workers;
  Manifest manifest("spectrum", cfg);
  for (const auto& p : config.fmaps) manifest.add_input(p);
  for (const auto& p : outputs) manifest.add_output(p);
  manifest.write(config.out_dir);

  for (std::size_t i = 0; i < ids.size(); ++i) {
    log << "profile " << ids[i] << ": " << profiles[i].sample_count << " samples, "
        << profiles[i].n_bins() << " bins\n";
  }
  return profiles;
}

void cmd_synth(const SynthConfig& config, std::ostream& log) {
  static constexpr Category kCycle[] = {Category::kCnn, Category::kTransformer, Category::kMlp};
  SynthSpec spec;
  spec.n_samples = config.samples;
  spec.n_classes = config.classes;
  spec.pairwise_rho = config.rho;
  spec.confidence_margin = config.margin;
  spec.seed = config.seed;
  for (std::size_t l = 0; l < config.models; ++l) {
    spec.models.push_back({config.acc, kCycle[l % 3]});
  }
  const auto registry = generate(spec);
  write_registry_bundle(config.out_dir, registry);

  ordered_json cfg;
  cfg["models"] = config.models;
  cfg["samples"] = config.samples;
  cfg["classes"] = config.classes;
  cfg["rho"] = config.rho;
  cfg["acc"] = config.acc;
  cfg["margin"] = config.margin;
  cfg["generator"] = std::string(SynthRng::kName);
  Manifest manifest("synth", cfg);
  manifest.set_seed(config.seed);
  manifest.add_output(config.out_dir / "registry.json");
  manifest.add_output(config.out_dir / "labels.txt");
  for (const auto& m : registry.models()) manifest.add_output(config.out_dir / (m.meta.id + ".ensl"));
  manifest.write(config.out_dir);

  log << "wrote " << registry.size() << " synthetic models (" << config.samples << " samples, "
      << config.classes << " classes, rho " << format_exact(config.rho) << ") to "
      << config.out_dir.string() << '\n';
}

}  // namespace synergy::app
