#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include "msfan/cube_io.hpp"
#include "msfan/dataset.hpp"
#include "msfan/errors.hpp"

namespace msfan {

namespace {

std::vector<double> gaussian_kernel(double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double total = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double v = std::exp(-0.5 * (i * i) / (sigma * sigma));
    k[static_cast<std::size_t>(i + radius)] = v;
    total += v;
  }
  for (double& v : k) v /= total;
  return k;
}

int reflect(int i, int n) {
  while (i < 0 || i >= n) {
    if (i < 0) i = -i - 1;
    if (i >= n) i = 2 * n - i - 1;
  }
  return i;
}

// White noise blurred by a separable Gaussian, standardized to zero mean and
// unit variance.
std::vector<double> smooth_field(int h, int w, double sigma, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> noise(static_cast<std::size_t>(h) * w);
  for (double& v : noise) v = normal(rng);
  if (sigma <= 0.0) return noise;

  const auto k = gaussian_kernel(sigma);
  const int r = static_cast<int>(k.size() / 2);
  std::vector<double> tmp(noise.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -r; i <= r; ++i) acc += k[static_cast<std::size_t>(i + r)] * noise[static_cast<std::size_t>(y) * w + reflect(x + i, w)];
      tmp[static_cast<std::size_t>(y) * w + x] = acc;
    }
  }
  std::vector<double> out(noise.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -r; i <= r; ++i) acc += k[static_cast<std::size_t>(i + r)] * tmp[static_cast<std::size_t>(reflect(y + i, h)) * w + x];
      out[static_cast<std::size_t>(y) * w + x] = acc;
    }
  }
  double mean = 0.0;
  for (double v : out) mean += v;
  mean /= static_cast<double>(out.size());
  double var = 0.0;
  for (double v : out) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / static_cast<double>(out.size()));
  for (double& v : out) v = (v - mean) / (sd > 0.0 ? sd : 1.0);
  return out;
}

}  // namespace

uint64_t derive_seed(uint64_t seed, uint64_t stream) {
  // splitmix64 finalizer over the combined state
  uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

SpectralCube synth_cube(const SynthOptions& options, uint64_t seed) {
  if (options.height <= 0 || options.width <= 0) {
    throw ContractError("synthetic cube dimensions must be positive");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int h = options.height;
  const int w = options.width;
  const std::size_t plane = static_cast<std::size_t>(h) * w;

  std::vector<std::vector<double>> fields;
  for (int k = 0; k < options.base_fields; ++k) fields.push_back(smooth_field(h, w, options.blur_sigma, rng));

  // Smooth spectral response of each shared field across the 14 channels.
  struct Response {
    double level, amplitude, frequency, phase;
  };
  std::vector<Response> responses;
  for (int k = 0; k < options.base_fields; ++k) {
    responses.push_back({0.5 + 0.5 * unit(rng), 0.4 * unit(rng), 0.5 + unit(rng),
                         2.0 * std::numbers::pi * unit(rng)});
  }
  const double tilt = unit(rng) - 0.5;

  SpectralCube cube(kSpectralChannels, h, w);
  for (int c = 0; c < kSpectralChannels; ++c) {
    const double lambda = static_cast<double>(c) / (kSpectralChannels - 1);
    const auto detail = smooth_field(h, w, options.blur_sigma, rng);
    const double offset = tilt * lambda;
    for (std::size_t i = 0; i < plane; ++i) {
      double v = offset + options.channel_detail * detail[i];
      for (int k = 0; k < options.base_fields; ++k) {
        const Response& r = responses[static_cast<std::size_t>(k)];
        const double gain = r.level + r.amplitude * std::sin(std::numbers::pi * r.frequency * lambda + r.phase);
        v += gain * fields[static_cast<std::size_t>(k)][i] / std::sqrt(static_cast<double>(options.base_fields));
      }
      cube.data[static_cast<std::size_t>(c) * plane + i] = v;
    }
  }

  const auto [lo, hi] = std::minmax_element(cube.data.begin(), cube.data.end());
  const double low = *lo;
  const double span = *hi - *lo > 0.0 ? *hi - *lo : 1.0;
  for (double& v : cube.data) v = std::clamp(0.02 + 0.96 * (v - low) / span, 0.0, 1.0);
  return cube;
}

double pearson_correlation(const SpectralCube& cube, int a, int b) {
  const std::size_t plane = static_cast<std::size_t>(cube.height) * cube.width;
  const double* x = cube.data.data() + static_cast<std::size_t>(a) * plane;
  const double* y = cube.data.data() + static_cast<std::size_t>(b) * plane;
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < plane; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(plane);
  my /= static_cast<double>(plane);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < plane; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

double min_adjacent_correlation(const SpectralCube& cube) {
  double lowest = 1.0;
  for (int c = 0; c + 1 < cube.channels; ++c) lowest = std::min(lowest, pearson_correlation(cube, c, c + 1));
  return lowest;
}

DatasetManifest synth_dataset(int count, const SynthOptions& options, uint64_t seed,
                              const std::string& dir, const MosaicLayout& layout) {
  if (count < 1) throw ConfigError("synth count must be >= 1");
  if (options.height <= 0 || options.width <= 0 || options.height % 12 != 0 ||
      options.width % 12 != 0) {
    throw ConfigError("synth dims " + std::to_string(options.height) + "x" +
                      std::to_string(options.width) + " must be positive multiples of 12");
  }
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(fs::path(dir) / "hr", ec);
  if (!ec) fs::create_directories(fs::path(dir) / "lr", ec);
  if (ec) throw IoError(IoError::Kind::kOpen, "cannot create dataset directory " + dir + ": " + ec.message());

  DatasetManifest manifest;
  manifest.height = options.height;
  manifest.width = options.width;
  manifest.scale = 3;
  manifest.seed = seed;
  manifest.layout = layout;
  manifest.original_split = true;
  manifest.min_adjacent_correlation = 1.0;

  const SplitCounts counts = split_counts(count);
  for (int id = 0; id < count; ++id) {
    const SpectralCube hr = synth_cube(options, derive_seed(seed, static_cast<uint64_t>(id)));
    const SpectralCube lr = downsample_cube(hr, manifest.scale);
    manifest.min_adjacent_correlation = std::min(manifest.min_adjacent_correlation, min_adjacent_correlation(hr));

    char name[32];
    std::snprintf(name, sizeof(name), "%04d.msic", id);
    SampleEntry entry;
    entry.id = id;
    entry.split = id < counts.train ? Split::kTrain
                  : id < counts.train + counts.val ? Split::kVal
                                                   : Split::kTest;
    entry.hr_path = std::string("hr/") + name;
    entry.lr_path = std::string("lr/") + name;
    save_cube(hr, (fs::path(dir) / entry.hr_path).string());
    save_cube(lr, (fs::path(dir) / entry.lr_path).string());
    manifest.samples.push_back(entry);
  }

  std::ofstream out(fs::path(dir) / "manifest.json", std::ios::trunc);
  if (!out) throw IoError(IoError::Kind::kOpen, "cannot write manifest in " + dir);
  out << manifest.to_json() << "\n";
  return manifest;
}

}  // namespace msfan
