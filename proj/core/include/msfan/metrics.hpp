#pragma once

#include <limits>
#include <span>
#include <string>
#include <vector>

#include "msfan/mosaic.hpp"

namespace msfan {

/// PSNR reported for a perfect reconstruction (MSE == 0).
inline constexpr double kPsnrPerfect = std::numeric_limits<double>::infinity();

inline constexpr int kSsimWindow = 7;

/// 10 log10(range^2 / MSE) jointly over all channels.
double psnr(const SpectralCube& pred, const SpectralCube& target, double data_range = 1.0);

/// PSNR over the live (non-dead) pixels of two mosaics.
double psnr_live_mosaic(const MosaicImage& pred, const MosaicImage& target,
                        const MosaicLayout& layout, double data_range = 1.0);

/// Mean SSIM over all valid positions of a uniform window x window sliding
/// window, with C1 = (0.01 R)^2 and C2 = (0.03 R)^2 and population
/// (1/N) statistics.
double ssim_plane(std::span<const double> x, std::span<const double> y, int height, int width,
                  int window = kSsimWindow, double data_range = 1.0);

struct MetricReport {
  std::string id;
  double psnr_db = 0.0;
  double ssim = 0.0;
  std::vector<double> per_channel_ssim;

  /// One line of JSON; an infinite PSNR is written as the string "inf".
  std::string to_json_line() const;
};

/// PSNR over the cube plus SSIM computed per channel and averaged.
MetricReport evaluate_cubes(const SpectralCube& pred, const SpectralCube& target,
                            int window = kSsimWindow, double data_range = 1.0);

struct Aggregate {
  double mean = 0.0;
  double stddev = 0.0;  // population standard deviation
};
Aggregate aggregate(const std::vector<double>& values);

}  // namespace msfan
