#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "synergy/matrix.hpp"

namespace synergy {

enum class Category { kCnn, kMlp, kTransformer };

// Single-letter code used in category patterns (C, M, T).
char category_letter(Category c) noexcept;
std::string_view category_name(Category c) noexcept;
// Accepts "CNN", "TRANSFORMER", "MLP" (case-insensitive) or the letters.
Category parse_category(std::string_view text);

// How stored scores enter the fusion step.
enum class ScoreKind {
  kLogits,         // softmax applied once to the stored values
  kProbabilities,  // stored values summed directly
};

std::string_view score_kind_name(ScoreKind kind) noexcept;
ScoreKind parse_score_kind(std::string_view text);

struct ModelMeta {
  std::string id;
  std::string display_name;
  Category category = Category::kCnn;
  std::optional<double> latency_s;
  std::string source_path;

  friend bool operator==(const ModelMeta&, const ModelMeta&) = default;
};

struct PredictionSet {
  ModelMeta meta;
  Matrix<double> scores;  // n_samples x n_classes

  std::size_t n_samples() const noexcept { return scores.rows(); }
  std::size_t n_classes() const noexcept { return scores.cols(); }
};

struct LabelSet {
  std::vector<std::uint32_t> labels;
  std::size_t n_classes = 0;

  std::size_t size() const noexcept { return labels.size(); }
};

// Immutable, shape-consistent collection of models sharing one label set.
class Registry {
 public:
  const std::vector<PredictionSet>& models() const noexcept { return models_; }
  const PredictionSet& model(std::size_t i) const { return models_.at(i); }
  const LabelSet& labels() const noexcept { return labels_; }
  std::size_t size() const noexcept { return models_.size(); }
  std::size_t n_samples() const noexcept { return labels_.size(); }
  std::size_t n_classes() const noexcept { return labels_.n_classes; }

  ScoreKind score_kind() const noexcept { return score_kind_; }

  // Free-form provenance (generator name, seed, ...), kept sorted by key.
  const std::map<std::string, std::string>& attributes() const noexcept { return attributes_; }

  std::optional<std::size_t> find(std::string_view id) const;
  std::vector<std::string> ids() const;

 private:
  friend Registry build_registry(std::vector<PredictionSet>, LabelSet, ScoreKind,
                                 std::map<std::string, std::string>);

  std::vector<PredictionSet> models_;
  LabelSet labels_;
  ScoreKind score_kind_ = ScoreKind::kLogits;
  std::map<std::string, std::string> attributes_;
};

// Reads an ENSL v1 binary or a CSV score file; the format is detected from
// the leading magic bytes.
PredictionSet load_predictions(const std::filesystem::path& path, ModelMeta meta);

// Parses CSV score text (optional header row detected by a non-numeric
// first token).
Matrix<double> parse_scores_csv(std::string_view text);

// Parses an ENSL v1 byte image.
Matrix<double> parse_scores_binary(std::span<const std::byte> bytes);

std::vector<std::byte> encode_scores_binary(const Matrix<double>& scores);
void write_binary(const std::filesystem::path& path, const Matrix<double>& scores);
void write_csv(const std::filesystem::path& path, const Matrix<double>& scores);

LabelSet parse_labels(std::string_view text, std::size_t n_classes);
LabelSet load_labels(const std::filesystem::path& path, std::size_t n_classes);
void write_labels(const std::filesystem::path& path, const LabelSet& labels);

// Validates shapes and id uniqueness. Throws ShapeError or ConfigError.
Registry build_registry(std::vector<PredictionSet> predictions, LabelSet labels,
                        ScoreKind kind = ScoreKind::kLogits,
                        std::map<std::string, std::string> attributes = {});

// Registry config (JSON):
//   { "scores_are": "logits", "labels": "labels.txt",
//     "attributes": { "generator": "..." },
//     "models": [ { "id": "a", "display_name": "A", "category": "CNN",
//                   "scores": "a.ensl", "latency_s": 0.12 }, ... ] }
// Relative paths resolve against the config file's directory.
struct RegistryConfig {
  std::vector<ModelMeta> models;  // source_path holds the resolved score path
  std::optional<std::filesystem::path> labels_path;
  ScoreKind score_kind = ScoreKind::kLogits;
  std::map<std::string, std::string> attributes;
};

RegistryConfig load_registry_config(const std::filesystem::path& path);
void write_registry_config(const std::filesystem::path& path, const RegistryConfig& config);

// Loads every model named in the config plus labels. `labels_override`
// takes precedence over the config's labels entry.
Registry load_registry(const std::filesystem::path& config_path,
                       const std::optional<std::filesystem::path>& labels_override = std::nullopt,
                       std::optional<ScoreKind> kind_override = std::nullopt);

// Writes ENSL score files, labels.txt and registry.json into `dir`.
void write_registry_bundle(const std::filesystem::path& dir, const Registry& registry);

std::vector<std::byte> read_file_bytes(const std::filesystem::path& path);

}  // namespace synergy
