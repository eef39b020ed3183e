#include "synergy/spectral.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <complex>
#include <fstream>
#include <thread>

#include "fft.hpp"
#include "synergy/errors.hpp"
#include "synergy/prediction_store.hpp"
#include "synergy/text.hpp"

namespace synergy {
namespace {

constexpr std::array<std::byte, 4> kFmapMagic{std::byte{0x46}, std::byte{0x4D}, std::byte{0x41},
                                              std::byte{0x50}};
constexpr std::size_t kFmapHeaderSize = 4 + 4 + 8 + 4 + 4 + 4;

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

// Runs body(i) for i in [0, count) on up to `workers` threads.
template <typename Body>
void parallel_for(std::size_t count, std::size_t workers, Body&& body) {
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(count, 1));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) body(i);
    });
  }
}

// Centered amplitude spectrum computed with reusable row/column plans.
class SpectrumPlan {
 public:
  SpectrumPlan(std::size_t h, std::size_t w) : h_(h), w_(w), rows_(w), cols_(h) {}

  template <typename T>
  void amplitude(std::span<const T> map, std::span<double> out) const {
    std::vector<std::complex<double>> buf(h_ * w_);
    for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = static_cast<double>(map[i]);
    for (std::size_t r = 0; r < h_; ++r) rows_.forward({buf.data() + r * w_, w_});
    std::vector<std::complex<double>> col(h_);
    for (std::size_t c = 0; c < w_; ++c) {
      for (std::size_t r = 0; r < h_; ++r) col[r] = buf[r * w_ + c];
      cols_.forward(col);
      for (std::size_t r = 0; r < h_; ++r) buf[r * w_ + c] = col[r];
    }
    for (std::size_t r = 0; r < h_; ++r) {
      const std::size_t sr = (r + h_ / 2) % h_;
      for (std::size_t c = 0; c < w_; ++c) {
        const std::size_t sc = (c + w_ / 2) % w_;
        out[sr * w_ + sc] = std::abs(buf[r * w_ + c]);
      }
    }
  }

 private:
  std::size_t h_, w_;
  detail::Fft rows_, cols_;
};

std::vector<double> bin_means(std::span<const double> amplitude,
                              std::span<const std::size_t> bins, std::size_t n_bins,
                              std::vector<std::size_t>& counts) {
  std::vector<double> sums(n_bins, 0.0);
  counts.assign(n_bins, 0);
  for (std::size_t i = 0; i < amplitude.size(); ++i) {
    sums[bins[i]] += amplitude[i];
    ++counts[bins[i]];
  }
  for (std::size_t b = 0; b < n_bins; ++b) {
    if (counts[b]) sums[b] /= static_cast<double>(counts[b]);
  }
  return sums;
}

std::vector<double> bin_centers(std::size_t n_bins) {
  std::vector<double> centers(n_bins);
  for (std::size_t b = 0; b < n_bins; ++b) {
    centers[b] = (static_cast<double>(b) + 0.5) / static_cast<double>(n_bins);
  }
  return centers;
}

}  // namespace

Matrix<double> FeatureMapSet::map_matrix(std::size_t sample, std::size_t channel) const {
  auto m = map(sample, channel);
  return Matrix<double>(height, width, std::vector<double>(m.begin(), m.end()));
}

FeatureMapSet parse_feature_maps(std::span<const std::byte> bytes, std::string model_id) {
  if (bytes.size() < kFmapHeaderSize) throw FormatError("FMAP header truncated");
  if (!std::equal(kFmapMagic.begin(), kFmapMagic.end(), bytes.begin())) {
    throw FormatError("bad FMAP magic");
  }
  const auto version = read_le<std::uint32_t>(bytes, 4);
  if (version != 1) throw FormatError("unsupported FMAP version " + std::to_string(version));
  FeatureMapSet fm;
  fm.model_id = std::move(model_id);
  fm.n_samples = read_le<std::uint64_t>(bytes, 8);
  fm.n_channels = read_le<std::uint32_t>(bytes, 16);
  fm.height = read_le<std::uint32_t>(bytes, 20);
  fm.width = read_le<std::uint32_t>(bytes, 24);
  if (fm.n_samples < 1 || fm.n_channels < 1 || fm.height < 2 || fm.width < 2) {
    throw FormatError("FMAP header declares an invalid shape (need n>=1, c>=1, h>=2, w>=2)");
  }
  const std::size_t payload = bytes.size() - kFmapHeaderSize;
  const std::size_t per_sample = fm.n_channels * fm.height * fm.width;
  if (payload % 4 != 0 || fm.n_samples > payload / 4 / per_sample ||
      payload / 4 != fm.n_samples * per_sample) {
    throw FormatError("FMAP payload holds " + std::to_string(payload / 4) +
                      " values, header declares " + std::to_string(fm.n_samples * per_sample));
  }
  fm.data.resize(fm.n_samples * per_sample);
  for (std::size_t i = 0; i < fm.data.size(); ++i) {
    const float f = std::bit_cast<float>(read_le<std::uint32_t>(bytes, kFmapHeaderSize + 4 * i));
    if (!std::isfinite(f)) {
      throw DataError("non-finite feature value at flat index " + std::to_string(i));
    }
    fm.data[i] = f;
  }
  return fm;
}

FeatureMapSet load_feature_maps(const std::filesystem::path& path, std::string model_id) {
  if (model_id.empty()) model_id = path.stem().string();
  const auto bytes = read_file_bytes(path);
  try {
    return parse_feature_maps(bytes, std::move(model_id));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::vector<std::byte> encode_feature_maps(const FeatureMapSet& maps) {
  std::vector<std::byte> out(kFmapMagic.begin(), kFmapMagic.end());
  out.reserve(kFmapHeaderSize + 4 * maps.data.size());
  append_le<std::uint32_t>(out, 1);
  append_le<std::uint64_t>(out, maps.n_samples);
  append_le<std::uint32_t>(out, static_cast<std::uint32_t>(maps.n_channels));
  append_le<std::uint32_t>(out, static_cast<std::uint32_t>(maps.height));
  append_le<std::uint32_t>(out, static_cast<std::uint32_t>(maps.width));
  for (float f : maps.data) append_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(f));
  return out;
}

void write_feature_maps(const std::filesystem::path& path, const FeatureMapSet& maps) {
  const auto bytes = encode_feature_maps(maps);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

Matrix<double> dft2_amplitude(const Matrix<double>& map) {
  Matrix<double> out(map.rows(), map.cols());
  if (map.empty()) return out;
  SpectrumPlan plan(map.rows(), map.cols());
  plan.amplitude(map.values(), out.values());
  return out;
}

std::vector<std::size_t> radial_bin_index(std::size_t height, std::size_t width,
                                          std::size_t n_bins) {
  if (n_bins < 2) throw ConfigError("radial profile needs at least 2 bins");
  const double ch = static_cast<double>(height / 2);
  const double cw = static_cast<double>(width / 2);
  const double half_diag = std::hypot(height / 2.0, width / 2.0);
  std::vector<std::size_t> bins(height * width);
  for (std::size_t r = 0; r < height; ++r) {
    for (std::size_t c = 0; c < width; ++c) {
      const double radius = std::hypot(static_cast<double>(r) - ch, static_cast<double>(c) - cw) /
                            half_diag;
      auto b = static_cast<std::size_t>(radius * static_cast<double>(n_bins));
      bins[r * width + c] = std::min(b, n_bins - 1);
    }
  }
  return bins;
}

SpectralProfile radial_profile(const Matrix<double>& amplitude, std::size_t n_bins) {
  const auto bins = radial_bin_index(amplitude.rows(), amplitude.cols(), n_bins);
  std::vector<std::size_t> counts;
  const auto means = bin_means(amplitude.values(), bins, n_bins, counts);
  SpectralProfile p;
  p.bin_centers = bin_centers(n_bins);
  p.sample_count = 1;
  p.values.resize(n_bins);
  for (std::size_t b = 0; b < n_bins; ++b) {
    if (counts[b]) p.values[b] = means[b];
  }
  return p;
}

SpectralProfile profile_model(const FeatureMapSet& maps, const ProfileOptions& options) {
  if (maps.map_count() == 0 || maps.map_size() == 0) {
    throw DataError("feature map set '" + maps.model_id + "' is empty");
  }
  const std::size_t n_bins = options.n_bins;
  const auto bins = radial_bin_index(maps.height, maps.width, n_bins);
  const SpectrumPlan plan(maps.height, maps.width);
  const std::size_t cells = maps.map_size();
  const bool log_first = options.order == AveragingOrder::kLogThenAverage;

  // Per-sample partial sums, merged in sample order afterwards so the result
  // does not depend on the worker count.
  const std::size_t width = log_first ? n_bins : cells;
  std::vector<double> partial(maps.n_samples * width, 0.0);
  std::vector<double> energy(maps.n_samples, 0.0);
  std::vector<std::size_t> counts(n_bins, 0);
  for (auto b : bins) ++counts[b];

  parallel_for(maps.n_samples, options.workers, [&](std::size_t s) {
    std::vector<double> amp(cells);
    std::vector<std::size_t> local_counts;
    double* acc = partial.data() + s * width;
    for (std::size_t c = 0; c < maps.n_channels; ++c) {
      plan.amplitude(maps.map(s, c), std::span<double>(amp));
      for (double a : amp) energy[s] += a;
      if (log_first) {
        const auto means = bin_means(amp, bins, n_bins, local_counts);
        for (std::size_t b = 0; b < n_bins; ++b) {
          if (local_counts[b]) acc[b] += std::log(means[b] + kLogFloor);
        }
      } else {
        for (std::size_t i = 0; i < cells; ++i) acc[i] += amp[i];
      }
    }
  });

  double total_energy = 0.0;
  for (double e : energy) total_energy += e;
  if (total_energy == 0.0) {
    throw DataError("feature maps of '" + maps.model_id + "' are all zero; no spectrum to profile");
  }

  std::vector<double> merged(width, 0.0);
  for (std::size_t s = 0; s < maps.n_samples; ++s) {
    for (std::size_t i = 0; i < width; ++i) merged[i] += partial[s * width + i];
  }
  const double map_count = static_cast<double>(maps.map_count());
  for (double& v : merged) v /= map_count;

  std::vector<double> log_values(n_bins, 0.0);
  if (log_first) {
    log_values = merged;
  } else {
    const auto means = bin_means(merged, bins, n_bins, counts);
    for (std::size_t b = 0; b < n_bins; ++b) {
      if (counts[b]) log_values[b] = std::log(means[b] + kLogFloor);
    }
  }

  SpectralProfile p;
  p.bin_centers = bin_centers(n_bins);
  p.sample_count = maps.n_samples;
  p.values.resize(n_bins);
  const double reference = log_values[0];
  for (std::size_t b = 0; b < n_bins; ++b) {
    if (counts[b]) p.values[b] = log_values[b] - reference;
  }
  return p;
}

double profile_distance(const SpectralProfile& a, const SpectralProfile& b) {
  if (a.n_bins() != b.n_bins()) {
    throw ShapeError("profiles have " + std::to_string(a.n_bins()) + " and " +
                     std::to_string(b.n_bins()) + " bins");
  }
  if (a.n_bins() == 0) throw ShapeError("empty profiles");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.n_bins(); ++i) {
    if (!a.values[i] || !b.values[i]) {
      throw DataError("profile bin " + std::to_string(i) + " is undefined");
    }
    const double d = *a.values[i] - *b.values[i];
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(a.n_bins()));
}

void write_profile_csv(std::ostream& out, const SpectralProfile& profile) {
  CsvWriter csv(out);
  csv.row({"bin_center", "relative_log_amplitude"});
  for (std::size_t b = 0; b < profile.n_bins(); ++b) {
    csv.row({format_exact(profile.bin_centers[b]),
             profile.values[b] ? format_exact(*profile.values[b]) : std::string()});
  }
}

}  // namespace synergy
