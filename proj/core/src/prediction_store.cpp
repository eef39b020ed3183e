#include "synergy/prediction_store.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

#include <json.hpp>

#include "synergy/errors.hpp"
#include "synergy/text.hpp"

namespace synergy {
namespace {

constexpr std::array<std::byte, 4> kEnslMagic{std::byte{0x45}, std::byte{0x4E},
                                              std::byte{0x53}, std::byte{0x4C}};
constexpr std::size_t kEnslHeaderSize = 4 + 4 + 8 + 4;

template <typename U>
U read_le(std::span<const std::byte> bytes, std::size_t offset) {
  U value = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    value |= static_cast<U>(std::to_integer<std::uint8_t>(bytes[offset + i])) << (8 * i);
  }
  return value;
}

template <typename U>
void append_le(std::vector<std::byte>& out, U value) {
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    out.push_back(static_cast<std::byte>((value >> (8 * i)) & 0xFF));
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    auto line = text.substr(start, nl - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = nl + 1;
  }
  while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  return lines;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(trim(line.substr(start)));
      break;
    }
    fields.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return fields;
}

// Parses a decimal float token; non-finite spellings ("nan", "inf") parse
// successfully so the caller can report them as data errors.
std::optional<double> parse_double(std::string_view token) {
  if (token.starts_with('+')) token.remove_prefix(1);
  if (token.empty()) return std::nullopt;
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec == std::errc::result_out_of_range) {
    return token.starts_with('-') ? -HUGE_VAL : HUGE_VAL;
  }
  if (ec != std::errc{} || ptr != token.data() + token.size()) return std::nullopt;
  return value;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

void write_bytes(const std::filesystem::path& path, std::string_view data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  auto bytes = read_file_bytes(path);
  return std::string(reinterpret_cast<const char*>(bytes.data()), bytes.size());
}

}  // namespace

char category_letter(Category c) noexcept {
  switch (c) {
    case Category::kCnn: return 'C';
    case Category::kMlp: return 'M';
    case Category::kTransformer: return 'T';
  }
  return '?';
}

std::string_view category_name(Category c) noexcept {
  switch (c) {
    case Category::kCnn: return "CNN";
    case Category::kMlp: return "MLP";
    case Category::kTransformer: return "TRANSFORMER";
  }
  return "?";
}

Category parse_category(std::string_view text) {
  auto t = lower(trim(text));
  if (t == "cnn" || t == "c") return Category::kCnn;
  if (t == "transformer" || t == "t" || t == "vit") return Category::kTransformer;
  if (t == "mlp" || t == "m" || t == "mlp-mixer") return Category::kMlp;
  throw ConfigError("unknown model category '" + std::string(text) +
                    "' (expected CNN, TRANSFORMER or MLP)");
}

std::string_view score_kind_name(ScoreKind kind) noexcept {
  return kind == ScoreKind::kLogits ? "logits" : "probs";
}

ScoreKind parse_score_kind(std::string_view text) {
  auto t = lower(trim(text));
  if (t == "logits") return ScoreKind::kLogits;
  if (t == "probs" || t == "probabilities" || t == "presoftmax-skip") {
    return ScoreKind::kProbabilities;
  }
  throw ConfigError("unknown scores_are value '" + std::string(text) +
                    "' (expected logits or probs)");
}

std::optional<std::size_t> Registry::find(std::string_view id) const {
  for (std::size_t i = 0; i < models_.size(); ++i) {
    if (models_[i].meta.id == id) return i;
  }
  return std::nullopt;
}

std::vector<std::string> Registry::ids() const {
  std::vector<std::string> out;
  out.reserve(models_.size());
  for (const auto& m : models_) out.push_back(m.meta.id);
  return out;
}

std::vector<std::byte> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path.string());
  std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::vector<std::byte> out(raw.size());
  std::memcpy(out.data(), raw.data(), raw.size());
  return out;
}

Matrix<double> parse_scores_binary(std::span<const std::byte> bytes) {
  if (bytes.size() < kEnslHeaderSize) {
    throw FormatError("ENSL header truncated (" + std::to_string(bytes.size()) + " bytes)");
  }
  if (!std::equal(kEnslMagic.begin(), kEnslMagic.end(), bytes.begin())) {
    throw FormatError("bad ENSL magic");
  }
  const auto version = read_le<std::uint32_t>(bytes, 4);
  if (version != 1) throw FormatError("unsupported ENSL version " + std::to_string(version));
  const auto n = read_le<std::uint64_t>(bytes, 8);
  const auto k = read_le<std::uint32_t>(bytes, 16);
  if (n < 1 || k < 2) {
    throw FormatError("ENSL header declares n_samples=" + std::to_string(n) +
                      ", n_classes=" + std::to_string(k) + " (need n>=1, k>=2)");
  }
  const auto payload = bytes.size() - kEnslHeaderSize;
  if (payload % 4 != 0 || n > payload / 4 / k || payload / 4 != n * k) {
    throw FormatError("ENSL header declares " + std::to_string(n) + "x" + std::to_string(k) +
                      " values but payload holds " + std::to_string(payload / 4) +
                      (payload % 4 ? " (plus trailing bytes)" : ""));
  }
  std::vector<double> values(n * k);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto bits = read_le<std::uint32_t>(bytes, kEnslHeaderSize + 4 * i);
    const auto f = std::bit_cast<float>(bits);
    if (!std::isfinite(f)) {
      throw DataError("non-finite score at row " + std::to_string(i / k) + ", column " +
                      std::to_string(i % k));
    }
    values[i] = static_cast<double>(f);
  }
  return Matrix<double>(n, k, std::move(values));
}

Matrix<double> parse_scores_csv(std::string_view text) {
  const auto lines = split_lines(text);
  std::vector<double> values;
  std::size_t cols = 0;
  std::size_t rows = 0;
  bool first = true;
  for (std::size_t li = 0; li < lines.size(); ++li) {
    const auto fields = split_fields(lines[li]);
    if (first) {
      first = false;
      auto lead = fields.front();
      auto lead_l = lower(lead);
      const bool numeric_like = parse_double(lead).has_value() || lead_l == "nan" ||
                                lead_l == "inf" || lead_l == "-inf";
      if (!numeric_like) continue;  // header row
    }
    if (cols == 0) cols = fields.size();
    if (fields.size() != cols) {
      throw FormatError("CSV row " + std::to_string(rows) + " has " +
                        std::to_string(fields.size()) + " columns, expected " +
                        std::to_string(cols));
    }
    for (std::size_t c = 0; c < fields.size(); ++c) {
      auto v = parse_double(fields[c]);
      if (!v) {
        throw FormatError("CSV row " + std::to_string(rows) + ", column " + std::to_string(c) +
                          ": not a number: '" + std::string(fields[c]) + "'");
      }
      if (!std::isfinite(*v)) {
        throw DataError("non-finite score at row " + std::to_string(rows) + ", column " +
                        std::to_string(c));
      }
      values.push_back(*v);
    }
    ++rows;
  }
  if (rows < 1) throw FormatError("CSV score file has no data rows");
  if (cols < 2) throw FormatError("CSV score file needs at least 2 class columns");
  return Matrix<double>(rows, cols, std::move(values));
}

PredictionSet load_predictions(const std::filesystem::path& path, ModelMeta meta) {
  const auto bytes = read_file_bytes(path);
  if (meta.source_path.empty()) meta.source_path = path.string();
  if (meta.latency_s && (!std::isfinite(*meta.latency_s) || *meta.latency_s < 0.0)) {
    throw ConfigError("model '" + meta.id + "': latency_s must be finite and >= 0");
  }
  try {
    if (bytes.size() >= 4 && std::equal(kEnslMagic.begin(), kEnslMagic.end(), bytes.begin())) {
      return PredictionSet{std::move(meta), parse_scores_binary(bytes)};
    }
    std::string_view text(reinterpret_cast<const char*>(bytes.data()), bytes.size());
    return PredictionSet{std::move(meta), parse_scores_csv(text)};
  } catch (const Error& e) {
    // keep the error kind, add the file
    const std::string msg = path.string() + ": " + e.what();
    if (e.code() == ErrorCode::kData) throw DataError(msg);
    throw FormatError(msg);
  }
}

std::vector<std::byte> encode_scores_binary(const Matrix<double>& scores) {
  std::vector<std::byte> out;
  out.reserve(kEnslHeaderSize + 4 * scores.size());
  out.insert(out.end(), kEnslMagic.begin(), kEnslMagic.end());
  append_le<std::uint32_t>(out, 1);
  append_le<std::uint64_t>(out, scores.rows());
  append_le<std::uint32_t>(out, static_cast<std::uint32_t>(scores.cols()));
  for (double v : scores.values()) {
    append_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
  return out;
}

void write_binary(const std::filesystem::path& path, const Matrix<double>& scores) {
  const auto bytes = encode_scores_binary(scores);
  write_bytes(path, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

void write_csv(const std::filesystem::path& path, const Matrix<double>& scores) {
  std::string text;
  for (std::size_t r = 0; r < scores.rows(); ++r) {
    for (std::size_t c = 0; c < scores.cols(); ++c) {
      if (c) text.push_back(',');
      text += format_exact(scores(r, c));
    }
    text.push_back('\n');
  }
  write_bytes(path, text);
}

LabelSet parse_labels(std::string_view text, std::size_t n_classes) {
  LabelSet out;
  out.n_classes = n_classes;
  const auto lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto tok = trim(lines[i]);
    long long value = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
    if (tok.empty() || ec != std::errc{} || ptr != tok.data() + tok.size()) {
      throw FormatError("label line " + std::to_string(i) + ": not an integer: '" +
                        std::string(tok) + "'");
    }
    if (value < 0 || static_cast<unsigned long long>(value) >= n_classes) {
      throw DataError("label line " + std::to_string(i) + ": class " + std::to_string(value) +
                      " outside [0, " + std::to_string(n_classes) + ")");
    }
    out.labels.push_back(static_cast<std::uint32_t>(value));
  }
  if (out.labels.empty()) throw FormatError("label file is empty");
  return out;
}

LabelSet load_labels(const std::filesystem::path& path, std::size_t n_classes) {
  try {
    return parse_labels(read_text(path), n_classes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_labels(const std::filesystem::path& path, const LabelSet& labels) {
  std::string text;
  for (auto l : labels.labels) {
    text += std::to_string(l);
    text.push_back('\n');
  }
  write_bytes(path, text);
}

Registry build_registry(std::vector<PredictionSet> predictions, LabelSet labels, ScoreKind kind,
                        std::map<std::string, std::string> attributes) {
  if (predictions.empty()) throw ConfigError("registry needs at least one model");
  std::set<std::string> seen;
  for (const auto& p : predictions) {
    if (!seen.insert(p.meta.id).second) {
      throw ConfigError("duplicate model id '" + p.meta.id + "'");
    }
    if (p.n_samples() < 1 || p.n_classes() < 2) {
      throw ShapeError("model '" + p.meta.id + "' has shape " + std::to_string(p.n_samples()) +
                       "x" + std::to_string(p.n_classes()) + " (need n>=1, k>=2)");
    }
    if (p.meta.latency_s && (!std::isfinite(*p.meta.latency_s) || *p.meta.latency_s < 0.0)) {
      throw ConfigError("model '" + p.meta.id + "': latency_s must be finite and >= 0");
    }
  }
  const auto& ref = predictions.front();
  for (const auto& p : predictions) {
    if (p.n_samples() != ref.n_samples() || p.n_classes() != ref.n_classes()) {
      throw ShapeError("shape mismatch: '" + ref.meta.id + "' is " +
                       std::to_string(ref.n_samples()) + "x" + std::to_string(ref.n_classes()) +
                       " but '" + p.meta.id + "' is " + std::to_string(p.n_samples()) + "x" +
                       std::to_string(p.n_classes()));
    }
  }
  if (labels.size() != ref.n_samples() || labels.n_classes != ref.n_classes()) {
    throw ShapeError("shape mismatch: '" + ref.meta.id + "' is " +
                     std::to_string(ref.n_samples()) + "x" + std::to_string(ref.n_classes()) +
                     " but 'labels' has " + std::to_string(labels.size()) + " samples over " +
                     std::to_string(labels.n_classes) + " classes");
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels.labels[i] >= labels.n_classes) {
      throw DataError("label " + std::to_string(i) + " out of range");
    }
  }
  for (const auto& p : predictions) {
    for (std::size_t i = 0; i < p.scores.size(); ++i) {
      if (!std::isfinite(p.scores.values()[i])) {
        throw DataError("model '" + p.meta.id + "': non-finite score at row " +
                        std::to_string(i / p.n_classes()) + ", column " +
                        std::to_string(i % p.n_classes()));
      }
    }
  }
  Registry reg;
  reg.models_ = std::move(predictions);
  reg.labels_ = std::move(labels);
  reg.score_kind_ = kind;
  reg.attributes_ = std::move(attributes);
  return reg;
}

RegistryConfig load_registry_config(const std::filesystem::path& path) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw FormatError(path.string() + ": invalid registry config: " + e.what());
  }
  const auto base = path.parent_path();
  auto resolve = [&](const std::string& p) {
    std::filesystem::path fp(p);
    return fp.is_absolute() ? fp : base / fp;
  };
  RegistryConfig cfg;
  try {
    if (!doc.is_object()) throw ConfigError("registry config must be a JSON object");
    if (doc.contains("scores_are")) cfg.score_kind = parse_score_kind(doc.at("scores_are").get<std::string>());
    if (doc.contains("labels")) cfg.labels_path = resolve(doc.at("labels").get<std::string>());
    if (doc.contains("attributes")) {
      for (const auto& [k, v] : doc.at("attributes").items()) {
        cfg.attributes[k] = v.is_string() ? v.get<std::string>() : v.dump();
      }
    }
    if (!doc.contains("models") || !doc.at("models").is_array() || doc.at("models").empty()) {
      throw ConfigError("registry config needs a non-empty 'models' array");
    }
    for (const auto& m : doc.at("models")) {
      ModelMeta meta;
      if (!m.contains("id")) throw ConfigError("model entry without 'id'");
      meta.id = m.at("id").get<std::string>();
      if (meta.id.empty()) throw ConfigError("model id must be non-empty");
      meta.display_name = m.value("display_name", meta.id);
      if (!m.contains("category")) throw ConfigError("model '" + meta.id + "' without 'category'");
      meta.category = parse_category(m.at("category").get<std::string>());
      if (!m.contains("scores")) throw ConfigError("model '" + meta.id + "' without 'scores'");
      meta.source_path = resolve(m.at("scores").get<std::string>()).string();
      if (m.contains("latency_s") && !m.at("latency_s").is_null()) {
        double lat = m.at("latency_s").get<double>();
        if (!std::isfinite(lat) || lat < 0.0) {
          throw ConfigError("model '" + meta.id + "': latency_s must be finite and >= 0");
        }
        meta.latency_s = lat;
      }
      cfg.models.push_back(std::move(meta));
    }
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": malformed registry config: " + e.what());
  }
  return cfg;
}

void write_registry_config(const std::filesystem::path& path, const RegistryConfig& config) {
  using nlohmann::ordered_json;
  const auto base = path.parent_path();
  auto relative = [&](const std::filesystem::path& p) {
    auto rel = p.lexically_relative(base);
    return (rel.empty() || rel.native().starts_with("..")) ? p.string() : rel.string();
  };
  ordered_json doc;
  doc["scores_are"] = std::string(score_kind_name(config.score_kind));
  if (config.labels_path) doc["labels"] = relative(*config.labels_path);
  if (!config.attributes.empty()) {
    ordered_json attrs = ordered_json::object();
    for (const auto& [k, v] : config.attributes) attrs[k] = v;
    doc["attributes"] = attrs;
  }
  doc["models"] = ordered_json::array();
  for (const auto& m : config.models) {
    ordered_json e;
    e["id"] = m.id;
    e["display_name"] = m.display_name;
    e["category"] = std::string(category_name(m.category));
    e["scores"] = relative(m.source_path);
    if (m.latency_s) e["latency_s"] = *m.latency_s;
    doc["models"].push_back(e);
  }
  write_bytes(path, doc.dump(2) + "\n");
}

Registry load_registry(const std::filesystem::path& config_path,
                       const std::optional<std::filesystem::path>& labels_override,
                       std::optional<ScoreKind> kind_override) {
  auto cfg = load_registry_config(config_path);
  auto labels_path = labels_override ? labels_override : cfg.labels_path;
  if (!labels_path) {
    throw ConfigError("no labels file: pass one explicitly or set 'labels' in " +
                      config_path.string());
  }
  std::vector<PredictionSet> preds;
  preds.reserve(cfg.models.size());
  for (auto& meta : cfg.models) {
    auto src = std::filesystem::path(meta.source_path);
    preds.push_back(load_predictions(src, std::move(meta)));
  }
  auto labels = load_labels(*labels_path, preds.front().n_classes());
  return build_registry(std::move(preds), std::move(labels),
                        kind_override.value_or(cfg.score_kind), std::move(cfg.attributes));
}

void write_registry_bundle(const std::filesystem::path& dir, const Registry& registry) {
  std::filesystem::create_directories(dir);
  RegistryConfig cfg;
  cfg.score_kind = registry.score_kind();
  cfg.attributes = registry.attributes();
  cfg.labels_path = dir / "labels.txt";
  write_labels(*cfg.labels_path, registry.labels());
  for (const auto& m : registry.models()) {
    auto meta = m.meta;
    meta.source_path = (dir / (m.meta.id + ".ensl")).string();
    write_binary(meta.source_path, m.scores);
    cfg.models.push_back(std::move(meta));
  }
  write_registry_config(dir / "registry.json", cfg);
}

}  // namespace synergy
