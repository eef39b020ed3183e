#include "manifest.hpp"

#include <array>
#include <fstream>
#include <memory>

#include <openssl/evp.h>

#include "app.hpp"
#include "synergy/errors.hpp"

namespace synergy::app {

std::string sha256_hex(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for hashing: " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    throw IoError("sha256 initialisation failed");
  }
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest.data(), &len);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex.push_back(kHex[digest[i] >> 4]);
    hex.push_back(kHex[digest[i] & 0xF]);
  }
  return hex;
}

Manifest::Manifest(std::string command, nlohmann::ordered_json config)
    : command_(std::move(command)), config_(std::move(config)) {}

void Manifest::add_input(const std::filesystem::path& path) { inputs_.push_back(path); }
void Manifest::add_output(const std::filesystem::path& path) { outputs_.push_back(path); }

std::filesystem::path Manifest::write(const std::filesystem::path& dir) const {
  nlohmann::ordered_json doc;
  doc["tool"] = std::string(kToolName);
  doc["version"] = std::string(kToolVersion);
  doc["command"] = command_;
  doc["config"] = config_;
  if (seed_) doc["seed"] = *seed_;
  doc["inputs"] = nlohmann::ordered_json::array();
  for (const auto& p : inputs_) {
    doc["inputs"].push_back({{"path", p.string()}, {"sha256", sha256_hex(p)}});
  }
  doc["outputs"] = nlohmann::ordered_json::array();
  for (const auto& p : outputs_) {
    doc["outputs"].push_back(
        {{"path", p.lexically_relative(dir).string()}, {"sha256", sha256_hex(p)}});
  }
  const auto path = dir / "manifest.json";
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << doc.dump(2) << '\n';
  return path;
}

}  // namespace synergy::app
