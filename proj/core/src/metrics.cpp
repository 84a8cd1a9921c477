#include "msfan/metrics.hpp"

#include <cmath>
#include <json.hpp>

#include "msfan/errors.hpp"
#include "ssim_kernel.hpp"

namespace msfan {

namespace {

double psnr_from_mse(double mse, double range) {
  if (mse == 0.0) return kPsnrPerfect;
  return 10.0 * std::log10(range * range / mse);
}

void require_same_dims(const SpectralCube& a, const SpectralCube& b) {
  if (a.channels != b.channels || a.height != b.height || a.width != b.width) {
    throw DimensionError("cube dimensions differ");
  }
}

}  // namespace

double psnr(const SpectralCube& pred, const SpectralCube& target, double data_range) {
  require_same_dims(pred, target);
  if (pred.data.empty()) throw DimensionError("psnr of empty cubes");
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.data.size(); ++i) {
    const double d = pred.data[i] - target.data[i];
    acc += d * d;
  }
  return psnr_from_mse(acc / static_cast<double>(pred.data.size()), data_range);
}

double psnr_live_mosaic(const MosaicImage& pred, const MosaicImage& target,
                        const MosaicLayout& layout, double data_range) {
  if (pred.height != target.height || pred.width != target.width) {
    throw DimensionError("mosaic dimensions differ");
  }
  double acc = 0.0;
  std::size_t live = 0;
  for (int y = 0; y < pred.height; ++y) {
    for (int x = 0; x < pred.width; ++x) {
      if (layout.is_dead(y % kPatternSize, x % kPatternSize)) continue;
      const double d = pred.at(y, x) - target.at(y, x);
      acc += d * d;
      ++live;
    }
  }
  if (live == 0) throw DimensionError("psnr of a mosaic without live pixels");
  return psnr_from_mse(acc / static_cast<double>(live), data_range);
}

double ssim_plane(std::span<const double> x, std::span<const double> y, int height, int width,
                  int window, double data_range) {
  if (x.size() != y.size() || x.size() != static_cast<std::size_t>(height) * width) {
    throw DimensionError("ssim: plane sizes differ");
  }
  if (window < 1 || height < window || width < window) {
    throw DimensionError("ssim: image " + std::to_string(height) + "x" + std::to_string(width) +
                         " is smaller than the " + std::to_string(window) + "x" +
                         std::to_string(window) + " window");
  }
  return detail::ssim_plane_impl(x.data(), y.data(), height, width, window, data_range, false).mean;
}

MetricReport evaluate_cubes(const SpectralCube& pred, const SpectralCube& target, int window,
                            double data_range) {
  require_same_dims(pred, target);
  MetricReport report;
  report.psnr_db = psnr(pred, target, data_range);
  const std::size_t plane = static_cast<std::size_t>(pred.height) * pred.width;
  double total = 0.0;
  for (int c = 0; c < pred.channels; ++c) {
    std::span<const double> a(pred.data.data() + c * plane, plane);
    std::span<const double> b(target.data.data() + c * plane, plane);
    const double s = ssim_plane(a, b, pred.height, pred.width, window, data_range);
    report.per_channel_ssim.push_back(s);
    total += s;
  }
  report.ssim = total / static_cast<double>(pred.channels);
  return report;
}

std::string MetricReport::to_json_line() const {
  nlohmann::json j;
  j["id"] = id;
  if (std::isinf(psnr_db)) {
    j["psnr_db"] = "inf";
  } else {
    j["psnr_db"] = psnr_db;
  }
  j["ssim"] = ssim;
  j["per_channel_ssim"] = per_channel_ssim;
  return j.dump();
}

Aggregate aggregate(const std::vector<double>& values) {
  Aggregate a;
  if (values.empty()) return a;
  double total = 0.0;
  for (double v : values) total += v;
  a.mean = total / static_cast<double>(values.size());
  if (std::isinf(a.mean)) return a;
  double var = 0.0;
  for (double v : values) var += (v - a.mean) * (v - a.mean);
  a.stddev = std::sqrt(var / static_cast<double>(values.size()));
  return a;
}

}  // namespace msfan
