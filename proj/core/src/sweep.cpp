#include "synergy/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <thread>

#include <json.hpp>

#include "synergy/correlation.hpp"
#include "synergy/ensemble.hpp"
#include "synergy/errors.hpp"
#include "synergy/text.hpp"

namespace synergy {
namespace {

bool ids_less(const EnsembleResult& a, const EnsembleResult& b) {
  return a.member_ids < b.member_ids;
}

EnsembleResult evaluate_one(const EnsembleEvaluator& evaluator, const Combination& combo,
                            const SweepOptions& options) {
  const auto& registry = evaluator.registry();
  auto score = evaluator.evaluate(combo, /*retain_predictions=*/false);

  EnsembleResult r;
  r.members = combo;
  r.member_ids = std::move(score.member_ids);
  r.member_accs = std::move(score.member_accs);
  r.soft_acc = score.soft_acc;
  r.acc_gain = score.acc_gain;

  std::vector<ModelMeta> metas;
  metas.reserve(combo.size());
  bool all_latency = true;
  double lat_sum = 0.0;
  double lat_max = 0.0;
  for (auto idx : combo) {
    const auto& meta = registry.model(idx).meta;
    r.display_names.push_back(meta.display_name);
    metas.push_back(meta);
    if (meta.latency_s) {
      lat_sum += *meta.latency_s;
      lat_max = std::max(lat_max, *meta.latency_s);
    } else {
      all_latency = false;
    }
  }
  r.pattern = classify_pattern(metas);
  if (all_latency && options.latency_mode != LatencyMode::kOff) {
    r.latency_s = options.latency_mode == LatencyMode::kSum ? lat_sum : lat_max;
  }

  if (options.compute_correlation && combo.size() == 3) {
    try {
      auto report = correlate_correctness(evaluator.correctness(combo[0]),
                                          evaluator.correctness(combo[1]),
                                          evaluator.correctness(combo[2]));
      r.partial_correlation = report.r_adjusted;
      r.correlation_note = report.undefined_reason;
    } catch (const InsufficientSamplesError&) {
      r.correlation_note = "insufficient samples";
    }
  } else if (options.compute_correlation) {
    r.correlation_note = "requires k = 3";
  }
  return r;
}

std::string optional_field(const std::optional<double>& v) {
  return v ? format_exact(*v) : std::string();
}

}  // namespace

std::uint64_t binomial(std::uint64_t n, std::uint64_t k) noexcept {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  for (std::uint64_t i = 0; i < k; ++i) {
    // r * (n - i) / (i + 1) is exact; cancel the divisor first
    const std::uint64_t g = std::gcd(r, i + 1);
    const std::uint64_t factor = (n - i) / ((i + 1) / g);
    if (__builtin_mul_overflow(r / g, factor, &r)) {
      return std::numeric_limits<std::uint64_t>::max();
    }
  }
  return r;
}

bool next_combination(Combination& combo, std::size_t model_count) noexcept {
  const std::size_t k = combo.size();
  std::size_t i = k;
  while (i > 0) {
    --i;
    if (combo[i] < model_count - k + i) {
      ++combo[i];
      for (std::size_t j = i + 1; j < k; ++j) combo[j] = combo[j - 1] + 1;
      return true;
    }
  }
  return false;
}

std::vector<Combination> enumerate_combinations(std::size_t model_count, std::size_t k) {
  if (k < 2 || k > model_count) {
    throw ConfigError("ensemble size k=" + std::to_string(k) + " must satisfy 2 <= k <= " +
                      std::to_string(model_count));
  }
  std::vector<Combination> out;
  out.reserve(binomial(model_count, k));
  Combination combo(k);
  for (std::size_t i = 0; i < k; ++i) combo[i] = i;
  do {
    out.push_back(combo);
  } while (next_combination(combo, model_count));
  return out;
}

CategoryPattern::CategoryPattern(std::string letters) : letters_(std::move(letters)) {
  for (char& c : letters_) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (letters_.empty() ||
      letters_.find_first_not_of("CMT") != std::string::npos) {
    throw ConfigError("category pattern '" + letters_ + "' must use letters C, M, T");
  }
  std::sort(letters_.begin(), letters_.end());
}

bool CategoryPattern::homogeneous() const noexcept {
  return std::all_of(letters_.begin(), letters_.end(),
                     [&](char c) { return c == letters_.front(); });
}

CategoryPattern classify_pattern(std::span<const ModelMeta> members) {
  if (members.empty()) throw ConfigError("cannot classify an empty ensemble");
  std::string letters;
  for (const auto& m : members) letters.push_back(category_letter(m.category));
  return CategoryPattern(std::move(letters));
}

std::string_view latency_mode_name(LatencyMode mode) noexcept {
  switch (mode) {
    case LatencyMode::kOff: return "off";
    case LatencyMode::kSum: return "sum";
    case LatencyMode::kMax: return "max";
  }
  return "?";
}

LatencyMode parse_latency_mode(std::string_view text) {
  if (text == "off") return LatencyMode::kOff;
  if (text == "sum") return LatencyMode::kSum;
  if (text == "max") return LatencyMode::kMax;
  throw ConfigError("unknown latency mode '" + std::string(text) + "' (expected sum, max, off)");
}

std::string_view rank_key_name(RankKey key) noexcept {
  return key == RankKey::kAccGain ? "acc_gain" : "soft_acc";
}

RankKey parse_rank_key(std::string_view text) {
  if (text == "acc_gain") return RankKey::kAccGain;
  if (text == "soft_acc") return RankKey::kSoftAcc;
  throw ConfigError("unknown rank key '" + std::string(text) + "' (expected acc_gain, soft_acc)");
}

SweepResult run_sweep(const Registry& registry, const SweepOptions& options) {
  auto combos = enumerate_combinations(registry.size(), options.k);
  if (options.require_latency && options.latency_mode != LatencyMode::kOff) {
    for (const auto& m : registry.models()) {
      if (!m.meta.latency_s) {
        throw ConfigError("model '" + m.meta.id + "' has no latency_s but latency is required");
      }
    }
  }

  const EnsembleEvaluator evaluator(registry);
  SweepResult result;
  result.options = options;
  result.model_count = registry.size();
  result.n_samples = registry.n_samples();
  result.records.resize(combos.size());

  const std::size_t workers = std::clamp<std::size_t>(options.workers, 1, combos.size());
  std::atomic<std::size_t> next{0};
  std::mutex error_mu;
  std::size_t error_index = std::numeric_limits<std::size_t>::max();
  std::exception_ptr error;

  auto work = [&] {
    for (std::size_t i = next.fetch_add(1); i < combos.size(); i = next.fetch_add(1)) {
      try {
        result.records[i] = evaluate_one(evaluator, combos[i], options);
      } catch (...) {
        // report the failure of the earliest combination regardless of scheduling
        std::lock_guard lock(error_mu);
        if (i < error_index) {
          error_index = i;
          error = std::current_exception();
        }
      }
    }
  };

  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (error) std::rethrow_exception(error);
  return result;
}

std::vector<EnsembleResult> rank(std::span<const EnsembleResult> results, RankKey key,
                                 std::size_t top,
                                 const std::optional<CategoryPattern>& pattern_filter) {
  std::vector<EnsembleResult> out;
  for (const auto& r : results) {
    if (!pattern_filter || r.pattern == *pattern_filter) out.push_back(r);
  }
  auto value = [key](const EnsembleResult& r) {
    return key == RankKey::kAccGain ? r.acc_gain : r.soft_acc;
  };
  std::stable_sort(out.begin(), out.end(), [&](const auto& a, const auto& b) {
    if (value(a) != value(b)) return value(a) > value(b);
    return ids_less(a, b);
  });
  if (out.size() > top) out.resize(top);
  return out;
}

std::vector<EnsembleResult> pareto_frontier(std::span<const EnsembleResult> results) {
  for (const auto& r : results) {
    if (!r.latency_s) {
      throw ConfigError("ensemble [" + join(r.member_ids, ";") +
                        "] has no aggregate latency; Pareto analysis needs every latency");
    }
  }
  std::vector<const EnsembleResult*> sorted;
  sorted.reserve(results.size());
  for (const auto& r : results) sorted.push_back(&r);
  std::sort(sorted.begin(), sorted.end(), [](const auto* a, const auto* b) {
    if (*a->latency_s != *b->latency_s) return *a->latency_s < *b->latency_s;
    if (a->acc_gain != b->acc_gain) return a->acc_gain > b->acc_gain;
    return ids_less(*a, *b);
  });

  std::vector<EnsembleResult> frontier;
  double best_faster = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    const double lat = *sorted[i]->latency_s;
    const double group_best = sorted[i]->acc_gain;
    while (j < sorted.size() && *sorted[j]->latency_s == lat) {
      // undominated: nothing faster reaches this gain, nothing equally fast beats it
      if (sorted[j]->acc_gain == group_best && group_best > best_faster) {
        frontier.push_back(*sorted[j]);
      }
      ++j;
    }
    best_faster = std::max(best_faster, group_best);
    i = j;
  }
  return frontier;
}

void write_sweep_csv(std::ostream& out, const SweepResult& result) {
  CsvWriter csv(out);
  const std::size_t k = result.options.k;
  std::vector<std::string> header{"member_ids", "display_names", "pattern"};
  for (std::size_t i = 1; i <= k; ++i) header.push_back("acc_" + std::to_string(i));
  for (const char* h : {"soft_acc", "acc_gain", "latency_s", "partial_correlation"}) {
    header.emplace_back(h);
  }
  csv.row(header);
  for (const auto& r : result.records) {
    std::vector<std::string> row{join(r.member_ids, ";"), join(r.display_names, ";"),
                                 r.pattern.str()};
    for (double a : r.member_accs) row.push_back(format_exact(a));
    row.push_back(format_exact(r.soft_acc));
    row.push_back(format_exact(r.acc_gain));
    row.push_back(optional_field(r.latency_s));
    row.push_back(optional_field(r.partial_correlation));
    csv.row(row);
  }
}

void write_sweep_json(std::ostream& out, const SweepResult& result) {
  using nlohmann::ordered_json;
  ordered_json doc;
  doc["k"] = result.options.k;
  doc["model_count"] = result.model_count;
  doc["n_samples"] = result.n_samples;
  doc["combinations"] = result.records.size();
  doc["latency_mode"] = std::string(latency_mode_name(result.options.latency_mode));
  doc["records"] = ordered_json::array();
  for (const auto& r : result.records) {
    ordered_json e;
    e["member_ids"] = r.member_ids;
    e["display_names"] = r.display_names;
    e["pattern"] = r.pattern.str();
    e["member_accs"] = r.member_accs;
    e["soft_acc"] = r.soft_acc;
    e["acc_gain"] = r.acc_gain;
    e["latency_s"] = r.latency_s ? ordered_json(*r.latency_s) : ordered_json(nullptr);
    e["partial_correlation"] =
        r.partial_correlation ? ordered_json(*r.partial_correlation) : ordered_json(nullptr);
    if (!r.correlation_note.empty()) e["correlation_note"] = r.correlation_note;
    doc["records"].push_back(std::move(e));
  }
  out << doc.dump(2) << '\n';
}

}  // namespace synergy
