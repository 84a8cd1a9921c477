#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "msfan/tensor.hpp"

namespace msfan {

inline constexpr int kPatternSize = 4;
inline constexpr int kPatternCells = kPatternSize * kPatternSize;
inline constexpr int kSpectralChannels = 14;

/// Assignment of the 16 cells of a 4x4 filter pattern to spectral channels.
/// Exactly 14 cells carry distinct channels 0..13; the other 2 are dead.
class MosaicLayout {
 public:
  static constexpr int kDead = -1;

  /// Channels 0..13 row-major over the first 14 cells; cells 14 and 15 dead.
  static MosaicLayout standard();
  /// Throws ConfigError unless the table satisfies the layout invariants.
  static MosaicLayout from_cells(const std::array<int, kPatternCells>& cells);
  /// Parses a JSON document `{"layout": [[..4..] x4]}` or a bare 4x4 array;
  /// dead cells are `null` or -1.
  static MosaicLayout from_json(const std::string& text);
  static MosaicLayout load(const std::string& path);

  int channel_at(int row, int col) const { return cells_[static_cast<std::size_t>(row * kPatternSize + col)]; }
  bool is_dead(int row, int col) const { return channel_at(row, col) == kDead; }
  const std::array<int, kPatternCells>& cells() const { return cells_; }
  /// Cell index (row * 4 + col) holding `channel`.
  int cell_of(int channel) const;

  std::string to_json() const;
  bool operator==(const MosaicLayout&) const = default;

 private:
  explicit MosaicLayout(const std::array<int, kPatternCells>& cells) : cells_(cells) {}
  std::array<int, kPatternCells> cells_{};
};

/// channels x height x width, channel-major.
struct SpectralCube {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<double> data;

  SpectralCube() = default;
  SpectralCube(int c, int h, int w, double fill = 0.0)
      : channels(c), height(h), width(w),
        data(static_cast<std::size_t>(c) * static_cast<std::size_t>(h) * static_cast<std::size_t>(w), fill) {}

  double& at(int c, int y, int x) {
    return data[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
  double at(int c, int y, int x) const {
    return data[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
  bool operator==(const SpectralCube&) const = default;
};

/// Single-channel image carrying one spectral sample per pixel.
struct MosaicImage {
  int height = 0;
  int width = 0;
  std::vector<double> data;

  MosaicImage() = default;
  MosaicImage(int h, int w, double fill = 0.0)
      : height(h), width(w), data(static_cast<std::size_t>(h) * static_cast<std::size_t>(w), fill) {}

  double& at(int y, int x) { return data[static_cast<std::size_t>(y) * width + x]; }
  double at(int y, int x) const { return data[static_cast<std::size_t>(y) * width + x]; }
  bool operator==(const MosaicImage&) const = default;
};

/// mosaic[4y + r, 4x + c] = cube[layout(r, c), y, x]; dead cells are zero.
MosaicImage cube_to_mosaic(const SpectralCube& cube, const MosaicLayout& layout);

/// Exact inverse of cube_to_mosaic on live cells. Dimensions must be
/// multiples of 4.
SpectralCube mosaic_to_cube(const MosaicImage& mosaic, const MosaicLayout& layout);

/// Per-channel factor x factor box-average decimation.
SpectralCube downsample_cube(const SpectralCube& hr, int factor = 3);

/// Per-channel Catmull-Rom bicubic interpolation by `factor`, pixel-centre
/// aligned with edge clamping.
SpectralCube bicubic_upsample_cube(const SpectralCube& lr, int factor = 3);

/// Stacks mosaics of equal size into an n x 1 x h x w tensor.
Tensor mosaics_to_tensor(const std::vector<MosaicImage>& mosaics);
/// Extracts sample `n` of an n x 1 x h x w tensor.
MosaicImage tensor_to_mosaic(const Tensor& t, int64_t n = 0);

}  // namespace msfan
