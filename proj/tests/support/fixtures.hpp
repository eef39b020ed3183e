#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "synergy/prediction_store.hpp"
#include "synergy/synthgen.hpp"

namespace fixture {

inline synergy::PredictionSet make_model(std::string id, synergy::Matrix<double> scores,
                                         synergy::Category category = synergy::Category::kCnn,
                                         std::optional<double> latency = std::nullopt) {
  synergy::ModelMeta meta;
  meta.id = id;
  meta.display_name = id;
  meta.category = category;
  meta.latency_s = latency;
  return {std::move(meta), std::move(scores)};
}

inline synergy::Matrix<double> random_scores(std::mt19937_64& gen, std::size_t n, std::size_t k,
                                             double scale = 4.0) {
  std::uniform_real_distribution<double> d(-scale, scale);
  synergy::Matrix<double> m(n, k);
  for (auto& v : m.values()) v = d(gen);
  return m;
}

inline synergy::LabelSet random_labels(std::mt19937_64& gen, std::size_t n, std::size_t k) {
  std::uniform_int_distribution<std::uint32_t> d(0, static_cast<std::uint32_t>(k - 1));
  synergy::LabelSet labels;
  labels.n_classes = k;
  for (std::size_t i = 0; i < n; ++i) labels.labels.push_back(d(gen));
  return labels;
}

inline synergy::Registry random_registry(std::mt19937_64& gen, std::size_t n, std::size_t k,
                                         std::size_t models) {
  std::vector<synergy::PredictionSet> preds;
  for (std::size_t m = 0; m < models; ++m) {
    preds.push_back(make_model("r" + std::to_string(m), random_scores(gen, n, k)));
  }
  return synergy::build_registry(std::move(preds), random_labels(gen, n, k));
}

inline synergy::SynthSpec synth_spec(std::size_t models, std::size_t n, double rho, double acc,
                                     std::uint64_t seed, std::size_t classes = 10) {
  synergy::SynthSpec spec;
  spec.n_samples = n;
  spec.n_classes = classes;
  spec.pairwise_rho = rho;
  spec.seed = seed;
  const synergy::Category cycle[] = {synergy::Category::kCnn, synergy::Category::kTransformer,
                                     synergy::Category::kMlp};
  for (std::size_t m = 0; m < models; ++m) spec.models.push_back({acc, cycle[m % 3]});
  return spec;
}

// Fresh directory under the system temp path, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("synergy-" + tag + "-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace fixture
