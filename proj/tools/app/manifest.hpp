#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace synergy::app {

std::string sha256_hex(const std::filesystem::path& path);

// Run record written next to the artifacts. Holds no timestamps or host
// details, so identical inputs give an identical manifest.
class Manifest {
 public:
  Manifest(std::string command, nlohmann::ordered_json config);

  void add_input(const std::filesystem::path& path);
  void add_output(const std::filesystem::path& path);
  void set_seed(std::uint64_t seed) { seed_ = seed; }

  // Writes manifest.json into `dir`, output paths relative to it.
  std::filesystem::path write(const std::filesystem::path& dir) const;

 private:
  std::string command_;
  nlohmann::ordered_json config_;
  std::vector<std::filesystem::path> inputs_;
  std::vector<std::filesystem::path> outputs_;
  std::optional<std::uint64_t> seed_;
};

}  // namespace synergy::app
