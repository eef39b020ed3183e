#include "synergy/correlation.hpp"

#include <algorithm>
#include <cmath>

#include "synergy/ensemble.hpp"
#include "synergy/errors.hpp"

namespace synergy {
namespace {

constexpr double kRadicandSlack = 1e-12;
constexpr std::size_t kIndependents = 2;

}  // namespace

std::vector<std::size_t> mistake_filter(std::span<const PredictionSet* const> members,
                                        const LabelSet& labels) {
  for (const auto* m : members) {
    if (m->n_samples() != labels.size() || m->n_classes() != labels.n_classes) {
      throw ShapeError("model '" + m->meta.id + "' does not match the label set shape");
    }
  }
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    for (const auto* m : members) {
      if (argmax(m->scores.row(i)) != labels.labels[i]) {
        out.push_back(i);
        break;
      }
    }
  }
  return out;
}

std::optional<double> pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw ShapeError("pearson: length mismatch " + std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()));
  }
  if (a.size() < 2) throw ShapeError("pearson: need at least 2 observations");
  auto constant = [](std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
  };
  if (constant(a) || constant(b)) return std::nullopt;

  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0) return std::nullopt;
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

double multiple_correlation(double r_xz, double r_yz, double r_xy) {
  for (double r : {r_xz, r_yz, r_xy}) {
    if (!(r >= -1.0 && r <= 1.0)) throw DomainError("correlation coefficient outside [-1, 1]");
  }
  const double denom = 1.0 - r_xy * r_xy;
  if (denom <= 0.0) throw DegenerateError("collinear independents (|r_xy| = 1)");
  double radicand = (r_xz * r_xz + r_yz * r_yz - 2.0 * r_xy * r_yz * r_xz) / denom;
  if (radicand < -kRadicandSlack || radicand > 1.0 + kRadicandSlack) {
    throw DomainError("inconsistent correlation triple (R^2 = " + std::to_string(radicand) + ")");
  }
  return std::sqrt(std::clamp(radicand, 0.0, 1.0));
}

double adjusted_correlation(double r_multiple, std::size_t n, std::size_t k_ind) {
  if (n <= k_ind + 1) {
    throw InsufficientSamplesError("adjusted correlation needs n > k + 1 (n = " +
                                   std::to_string(n) + ", k = " + std::to_string(k_ind) + ")");
  }
  const double r2 = r_multiple * r_multiple;
  const double adj = 1.0 - (1.0 - r2) * static_cast<double>(n - 1) /
                               static_cast<double>(n - k_ind - 1);
  return std::sqrt(std::max(adj, 0.0));
}

CorrelationReport correlate_correctness(std::span<const std::uint8_t> x,
                                        std::span<const std::uint8_t> y,
                                        std::span<const std::uint8_t> z) {
  if (x.size() != y.size() || x.size() != z.size()) {
    throw ShapeError("correctness vectors differ in length");
  }
  CorrelationReport report;
  std::array<std::vector<double>, 3> v;
  const std::array<std::span<const std::uint8_t>, 3> src{x, y, z};
  for (std::size_t m = 0; m < 3; ++m) v[m].reserve(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] && y[i] && z[i]) continue;  // nobody wrong
    for (std::size_t m = 0; m < 3; ++m) v[m].push_back(src[m][i] ? 1.0 : 0.0);
  }
  report.n_filtered = v[0].size();
  if (report.n_filtered < kIndependents + 2) {
    throw InsufficientSamplesError("mistake-filtered set has " +
                                   std::to_string(report.n_filtered) +
                                   " samples, need at least 4");
  }

  // pair[a][b] for members a, b
  std::array<std::array<std::optional<double>, 3>, 3> pair{};
  pair[0][1] = pair[1][0] = report.r_xy = pearson(v[0], v[1]);
  pair[0][2] = pair[2][0] = report.r_xz = pearson(v[0], v[2]);
  pair[1][2] = pair[2][1] = report.r_yz = pearson(v[1], v[2]);
  // Two members with the same correctness vector are collinear whether or
  // not the vector varies (identical models leave only all-wrong samples).
  if (v[0] == v[1] || v[0] == v[2] || v[1] == v[2]) {
    report.undefined_reason = "collinear";
    return report;
  }
  if (!report.r_xy || !report.r_xz || !report.r_yz) {
    report.undefined_reason = "zero variance";
    return report;
  }

  double total = 0.0;
  for (std::size_t dep = 0; dep < 3; ++dep) {
    const std::size_t a = (dep + 1) % 3;
    const std::size_t b = (dep + 2) % 3;
    try {
      const double r = multiple_correlation(*pair[a][dep], *pair[b][dep], *pair[a][b]);
      report.r_multiple[dep] = r;
      report.r_adjusted_each[dep] = adjusted_correlation(r, report.n_filtered, kIndependents);
      total += *report.r_adjusted_each[dep];
    } catch (const DegenerateError&) {
      if (report.undefined_reason.empty()) report.undefined_reason = "collinear";
    } catch (const DomainError&) {
      if (report.undefined_reason.empty()) report.undefined_reason = "inconsistent";
    }
  }
  if (report.undefined_reason.empty()) report.r_adjusted = total / 3.0;
  return report;
}

CorrelationReport triple_partial_correlation(std::span<const PredictionSet* const> members,
                                             const LabelSet& labels) {
  if (members.size() != 3) {
    throw ConfigError("partial correlation needs exactly 3 members, got " +
                      std::to_string(members.size()));
  }
  std::array<std::vector<std::uint8_t>, 3> correct;
  for (std::size_t m = 0; m < 3; ++m) {
    const auto& p = *members[m];
    if (p.n_samples() != labels.size() || p.n_classes() != labels.n_classes) {
      throw ShapeError("model '" + p.meta.id + "' does not match the label set shape");
    }
    correct[m].resize(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
      correct[m][i] = argmax(p.scores.row(i)) == labels.labels[i];
    }
  }
  return correlate_correctness(correct[0], correct[1], correct[2]);
}

}  // namespace synergy
