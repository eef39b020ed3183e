#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "synergy/matrix.hpp"
#include "synergy/prediction_store.hpp"

namespace synergy {

// Row-wise softmax, stabilized by subtracting the row maximum.
Matrix<double> softmax_rows(const Matrix<double>& scores);

// Index of the largest entry; ties resolve to the lowest index.
std::uint32_t argmax(std::span<const double> row) noexcept;

// Top-1 accuracy of raw scores against labels, in [0, 1].
double standalone_accuracy(const PredictionSet& model, const LabelSet& labels);

// soft_acc - max(member_accs). Throws ConfigError on an empty list.
double acc_gain(double soft_acc, std::span<const double> member_accs);

struct EnsembleScore {
  std::vector<std::string> member_ids;
  std::vector<double> member_accs;
  double soft_acc = 0.0;
  double acc_gain = 0.0;
  std::vector<std::uint32_t> fused_predictions;  // empty unless retained
};

struct FusionOptions {
  ScoreKind score_kind = ScoreKind::kLogits;
  bool retain_predictions = true;
};

// Unweighted softmax-sum fusion of two or more members.
EnsembleScore fuse_soft(std::span<const PredictionSet* const> members, const LabelSet& labels,
                        const FusionOptions& options = {});
EnsembleScore fuse_soft(std::span<const PredictionSet> members, const LabelSet& labels,
                        const FusionOptions& options = {});

// Per-model probability matrices, computed once and shared read-only.
class ProbabilityCache {
 public:
  ProbabilityCache(const Registry& registry, ScoreKind kind);

  const Matrix<double>& probabilities(std::size_t model) const { return probs_.at(model); }
  std::size_t size() const noexcept { return probs_.size(); }

 private:
  std::vector<Matrix<double>> probs_;
};

// Evaluates arbitrary member subsets of one registry against its labels,
// reusing cached probabilities and standalone accuracies.
class EnsembleEvaluator {
 public:
  explicit EnsembleEvaluator(const Registry& registry);
  EnsembleEvaluator(const Registry& registry, ScoreKind kind);

  const Registry& registry() const noexcept { return registry_; }
  const ProbabilityCache& cache() const noexcept { return cache_; }
  double accuracy(std::size_t model) const { return accuracies_.at(model); }
  // Per-sample correctness of each model's own top-1 prediction.
  const std::vector<std::uint8_t>& correctness(std::size_t model) const {
    return correct_.at(model);
  }

  EnsembleScore evaluate(std::span<const std::size_t> members, bool retain_predictions) const;

 private:
  const Registry& registry_;
  ProbabilityCache cache_;
  std::vector<double> accuracies_;
  std::vector<std::vector<std::uint8_t>> correct_;
};

}  // namespace synergy
