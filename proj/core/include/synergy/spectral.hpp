#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "synergy/matrix.hpp"

namespace synergy {

// Last-layer feature maps of one model: samples x channels x height x width,
// stored as exported (32-bit floats).
struct FeatureMapSet {
  std::string model_id;
  std::size_t n_samples = 0;
  std::size_t n_channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<float> data;

  std::size_t map_size() const noexcept { return height * width; }
  std::size_t map_count() const noexcept { return n_samples * n_channels; }
  std::span<const float> map(std::size_t sample, std::size_t channel) const {
    return {data.data() + (sample * n_channels + channel) * map_size(), map_size()};
  }
  // Widened copy of one map.
  Matrix<double> map_matrix(std::size_t sample, std::size_t channel) const;
};

// FMAP v1 reader/writer.
FeatureMapSet parse_feature_maps(std::span<const std::byte> bytes, std::string model_id);
FeatureMapSet load_feature_maps(const std::filesystem::path& path, std::string model_id = {});
std::vector<std::byte> encode_feature_maps(const FeatureMapSet& maps);
void write_feature_maps(const std::filesystem::path& path, const FeatureMapSet& maps);

// |DFT2(map)| with the zero-frequency term moved to (h/2, w/2).
Matrix<double> dft2_amplitude(const Matrix<double>& map);

struct SpectralProfile {
  std::vector<double> bin_centers;            // radial frequency in [0, 1]
  std::vector<std::optional<double>> values;  // nullopt for empty bins
  std::size_t sample_count = 0;

  std::size_t n_bins() const noexcept { return values.size(); }
};

// Bin index of every cell of an h x w centered spectrum: distance from the
// center over the half-diagonal, equal-width bins over [0, 1].
std::vector<std::size_t> radial_bin_index(std::size_t height, std::size_t width,
                                          std::size_t n_bins);

// Mean amplitude per radial bin (no log, no shift).
SpectralProfile radial_profile(const Matrix<double>& amplitude, std::size_t n_bins);

enum class AveragingOrder {
  kAverageThenLog,  // mean amplitude over maps, then log
  kLogThenAverage,  // log of each map's radial profile, then mean
};

struct ProfileOptions {
  std::size_t n_bins = 20;
  AveragingOrder order = AveragingOrder::kAverageThenLog;
  std::size_t workers = 1;
};

inline constexpr double kLogFloor = 1e-12;

// Average relative log-amplitude profile over every sample and channel;
// the lowest-frequency bin reads exactly 0.
SpectralProfile profile_model(const FeatureMapSet& maps, const ProfileOptions& options = {});

// RMS difference over bins. Throws ShapeError on bin-count mismatch and
// DataError when either profile has an undefined bin.
double profile_distance(const SpectralProfile& a, const SpectralProfile& b);

void write_profile_csv(std::ostream& out, const SpectralProfile& profile);

}  // namespace synergy
