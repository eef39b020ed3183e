#include "synergy/ensemble.hpp"

#include <algorithm>
#include <cmath>

#include "synergy/errors.hpp"

namespace synergy {
namespace {

void check_shapes(std::span<const PredictionSet* const> members, const LabelSet& labels) {
  for (const auto* m : members) {
    if (m->n_samples() != labels.size() || m->n_classes() != labels.n_classes) {
      throw ShapeError("model '" + m->meta.id + "' is " + std::to_string(m->n_samples()) + "x" +
                       std::to_string(m->n_classes()) + " but labels cover " +
                       std::to_string(labels.size()) + " samples over " +
                       std::to_string(labels.n_classes) + " classes");
    }
  }
}

// Sums the members' probability rows per class and returns the argmax for
// every sample. Each cell is summed in ascending value order, which makes
// the result independent of member order bit for bit.
std::vector<std::uint32_t> fused_argmax(std::span<const Matrix<double>* const> probs) {
  const std::size_t n = probs.front()->rows();
  const std::size_t k = probs.front()->cols();
  const std::size_t m = probs.size();
  std::vector<std::uint32_t> out(n);
  std::vector<double> cell(m);
  std::vector<double> fused(k);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      for (std::size_t l = 0; l < m; ++l) cell[l] = (*probs[l])(i, j);
      // insertion sort, m is tiny
      for (std::size_t a = 1; a < m; ++a) {
        double v = cell[a];
        std::size_t b = a;
        while (b > 0 && cell[b - 1] > v) {
          cell[b] = cell[b - 1];
          --b;
        }
        cell[b] = v;
      }
      double s = 0.0;
      for (double v : cell) s += v;
      fused[j] = s;
    }
    out[i] = argmax(fused);
  }
  return out;
}

double accuracy_of(std::span<const std::uint32_t> predictions, const LabelSet& labels) {
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    hits += predictions[i] == labels.labels[i];
  }
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

}  // namespace

Matrix<double> softmax_rows(const Matrix<double>& scores) {
  Matrix<double> out(scores.rows(), scores.cols());
  for (std::size_t r = 0; r < scores.rows(); ++r) {
    auto in = scores.row(r);
    auto dst = out.row(r);
    const double mx = *std::max_element(in.begin(), in.end());
    double total = 0.0;
    for (std::size_t c = 0; c < in.size(); ++c) {
      dst[c] = std::exp(in[c] - mx);
      total += dst[c];
    }
    for (double& v : dst) v /= total;
  }
  return out;
}

std::uint32_t argmax(std::span<const double> row) noexcept {
  std::uint32_t best = 0;
  for (std::uint32_t j = 1; j < row.size(); ++j) {
    if (row[j] > row[best]) best = j;
  }
  return best;
}

double standalone_accuracy(const PredictionSet& model, const LabelSet& labels) {
  const PredictionSet* one[] = {&model};
  check_shapes(one, labels);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < model.n_samples(); ++i) {
    hits += argmax(model.scores.row(i)) == labels.labels[i];
  }
  return static_cast<double>(hits) / static_cast<double>(model.n_samples());
}

double acc_gain(double soft_acc, std::span<const double> member_accs) {
  if (member_accs.empty()) throw ConfigError("acc_gain needs at least one member accuracy");
  for (double a : member_accs) {
    if (!(a >= 0.0 && a <= 1.0)) throw DomainError("member accuracy outside [0, 1]");
  }
  return soft_acc - *std::max_element(member_accs.begin(), member_accs.end());
}

EnsembleScore fuse_soft(std::span<const PredictionSet* const> members, const LabelSet& labels,
                        const FusionOptions& options) {
  if (members.size() < 2) {
    throw ConfigError("fusion needs at least 2 members, got " + std::to_string(members.size()));
  }
  check_shapes(members, labels);

  std::vector<Matrix<double>> owned;
  std::vector<const Matrix<double>*> probs;
  owned.reserve(members.size());
  for (const auto* m : members) {
    if (options.score_kind == ScoreKind::kLogits) {
      owned.push_back(softmax_rows(m->scores));
      probs.push_back(&owned.back());
    } else {
      probs.push_back(&m->scores);
    }
  }

  EnsembleScore score;
  for (const auto* m : members) {
    score.member_ids.push_back(m->meta.id);
    score.member_accs.push_back(standalone_accuracy(*m, labels));
  }
  auto fused = fused_argmax(probs);
  score.soft_acc = accuracy_of(fused, labels);
  score.acc_gain = acc_gain(score.soft_acc, score.member_accs);
  if (options.retain_predictions) score.fused_predictions = std::move(fused);
  return score;
}

EnsembleScore fuse_soft(std::span<const PredictionSet> members, const LabelSet& labels,
                        const FusionOptions& options) {
  std::vector<const PredictionSet*> ptrs;
  ptrs.reserve(members.size());
  for (const auto& m : members) ptrs.push_back(&m);
  return fuse_soft(std::span<const PredictionSet* const>(ptrs), labels, options);
}

ProbabilityCache::ProbabilityCache(const Registry& registry, ScoreKind kind) {
  probs_.reserve(registry.size());
  for (const auto& m : registry.models()) {
    probs_.push_back(kind == ScoreKind::kLogits ? softmax_rows(m.scores) : m.scores);
  }
}

EnsembleEvaluator::EnsembleEvaluator(const Registry& registry)
    : EnsembleEvaluator(registry, registry.score_kind()) {}

EnsembleEvaluator::EnsembleEvaluator(const Registry& registry, ScoreKind kind)
    : registry_(registry), cache_(registry, kind) {
  const auto& labels = registry.labels();
  for (const auto& m : registry.models()) {
    std::vector<std::uint8_t> correct(m.n_samples());
    std::size_t hits = 0;
    for (std::size_t i = 0; i < m.n_samples(); ++i) {
      correct[i] = argmax(m.scores.row(i)) == labels.labels[i];
      hits += correct[i];
    }
    accuracies_.push_back(static_cast<double>(hits) / static_cast<double>(m.n_samples()));
    correct_.push_back(std::move(correct));
  }
}

EnsembleScore EnsembleEvaluator::evaluate(std::span<const std::size_t> members,
                                          bool retain_predictions) const {
  if (members.size() < 2) {
    throw ConfigError("fusion needs at least 2 members, got " + std::to_string(members.size()));
  }
  std::vector<const Matrix<double>*> probs;
  EnsembleScore score;
  for (auto idx : members) {
    probs.push_back(&cache_.probabilities(idx));
    score.member_ids.push_back(registry_.model(idx).meta.id);
    score.member_accs.push_back(accuracies_.at(idx));
  }
  auto fused = fused_argmax(probs);
  score.soft_acc = accuracy_of(fused, registry_.labels());
  score.acc_gain = acc_gain(score.soft_acc, score.member_accs);
  if (retain_predictions) score.fused_predictions = std::move(fused);
  return score;
}

}  // namespace synergy
