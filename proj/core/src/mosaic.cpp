#include "msfan/mosaic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "msfan/errors.hpp"

namespace msfan {

MosaicLayout MosaicLayout::standard() {
  std::array<int, kPatternCells> cells{};
  for (int i = 0; i < kPatternCells; ++i) cells[static_cast<std::size_t>(i)] = i < kSpectralChannels ? i : kDead;
  return MosaicLayout(cells);
}

MosaicLayout MosaicLayout::from_cells(const std::array<int, kPatternCells>& cells) {
  std::array<int, kSpectralChannels> seen{};
  int dead = 0;
  for (int v : cells) {
    if (v == kDead) {
      ++dead;
    } else if (v < 0 || v >= kSpectralChannels) {
      throw ConfigError("layout cell value " + std::to_string(v) + " outside 0..13");
    } else if (seen[static_cast<std::size_t>(v)]++ != 0) {
      throw ConfigError("layout assigns channel " + std::to_string(v) + " more than once");
    }
  }
  if (dead != kPatternCells - kSpectralChannels) {
    throw ConfigError("layout must have exactly 2 dead cells, found " + std::to_string(dead));
  }
  return MosaicLayout(cells);
}

MosaicLayout MosaicLayout::from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("layout is not valid JSON: ") + e.what());
  }
  const nlohmann::json& rows = doc.is_object() ? doc.at("layout") : doc;
  if (!rows.is_array() || rows.size() != kPatternSize) {
    throw ConfigError("layout must be a 4x4 array");
  }
  std::array<int, kPatternCells> cells{};
  for (int r = 0; r < kPatternSize; ++r) {
    const auto& row = rows[static_cast<std::size_t>(r)];
    if (!row.is_array() || row.size() != kPatternSize) throw ConfigError("layout must be a 4x4 array");
    for (int c = 0; c < kPatternSize; ++c) {
      const auto& cell = row[static_cast<std::size_t>(c)];
      int v = kDead;
      if (cell.is_number_integer()) {
        v = cell.get<int>();
      } else if (!cell.is_null()) {
        throw ConfigError("layout cells must be integers or null");
      }
      cells[static_cast<std::size_t>(r * kPatternSize + c)] = v;
    }
  }
  return from_cells(cells);
}

MosaicLayout MosaicLayout::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(IoError::Kind::kOpen, "cannot open layout file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

int MosaicLayout::cell_of(int channel) const {
  for (int i = 0; i < kPatternCells; ++i) {
    if (cells_[static_cast<std::size_t>(i)] == channel) return i;
  }
  throw ContractError("channel " + std::to_string(channel) + " not present in layout");
}

std::string MosaicLayout::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (int r = 0; r < kPatternSize; ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (int c = 0; c < kPatternSize; ++c) {
      const int v = channel_at(r, c);
      row.push_back(v == kDead ? nlohmann::json(nullptr) : nlohmann::json(v));
    }
    rows.push_back(row);
  }
  return nlohmann::json{{"layout", rows}}.dump();
}

// ---------------------------------------------------------------------------

MosaicImage cube_to_mosaic(const SpectralCube& cube, const MosaicLayout& layout) {
  if (cube.channels != kSpectralChannels) {
    throw DimensionError("cube_to_mosaic expects 14 channels, got " + std::to_string(cube.channels));
  }
  MosaicImage mosaic(cube.height * kPatternSize, cube.width * kPatternSize);
  for (int r = 0; r < kPatternSize; ++r) {
    for (int c = 0; c < kPatternSize; ++c) {
      const int ch = layout.channel_at(r, c);
      if (ch == MosaicLayout::kDead) continue;
      for (int y = 0; y < cube.height; ++y) {
        for (int x = 0; x < cube.width; ++x) {
          mosaic.at(kPatternSize * y + r, kPatternSize * x + c) = cube.at(ch, y, x);
        }
      }
    }
  }
  return mosaic;
}

SpectralCube mosaic_to_cube(const MosaicImage& mosaic, const MosaicLayout& layout) {
  if (mosaic.height % kPatternSize != 0 || mosaic.width % kPatternSize != 0) {
    throw ContractError("mosaic dimensions " + std::to_string(mosaic.height) + "x" +
                        std::to_string(mosaic.width) + " are not multiples of 4");
  }
  SpectralCube cube(kSpectralChannels, mosaic.height / kPatternSize, mosaic.width / kPatternSize);
  for (int r = 0; r < kPatternSize; ++r) {
    for (int c = 0; c < kPatternSize; ++c) {
      const int ch = layout.channel_at(r, c);
      if (ch == MosaicLayout::kDead) continue;
      for (int y = 0; y < cube.height; ++y) {
        for (int x = 0; x < cube.width; ++x) {
          cube.at(ch, y, x) = mosaic.at(kPatternSize * y + r, kPatternSize * x + c);
        }
      }
    }
  }
  return cube;
}

SpectralCube downsample_cube(const SpectralCube& hr, int factor) {
  if (factor < 1 || hr.height % factor != 0 || hr.width % factor != 0) {
    throw ContractError("cube " + std::to_string(hr.height) + "x" + std::to_string(hr.width) +
                        " is not divisible by factor " + std::to_string(factor));
  }
  SpectralCube lr(hr.channels, hr.height / factor, hr.width / factor);
  const double norm = 1.0 / static_cast<double>(factor * factor);
  for (int ch = 0; ch < hr.channels; ++ch) {
    for (int y = 0; y < lr.height; ++y) {
      for (int x = 0; x < lr.width; ++x) {
        double acc = 0.0;
        for (int dy = 0; dy < factor; ++dy) {
          for (int dx = 0; dx < factor; ++dx) acc += hr.at(ch, y * factor + dy, x * factor + dx);
        }
        lr.at(ch, y, x) = acc * norm;
      }
    }
  }
  return lr;
}

namespace {

struct Taps {
  std::array<int, 4> index;
  std::array<double, 4> weight;
};

// Catmull-Rom (a = -0.5) taps for each output coordinate along one axis.
std::vector<Taps> cubic_taps(int in_size, int factor) {
  std::vector<Taps> taps(static_cast<std::size_t>(in_size) * factor);
  for (int o = 0; o < in_size * factor; ++o) {
    const double u = (o + 0.5) / factor - 0.5;
    const double base = std::floor(u);
    const double t = u - base;
    const double t2 = t * t;
    const double t3 = t2 * t;
    Taps& tp = taps[static_cast<std::size_t>(o)];
    tp.weight = {0.5 * (-t3 + 2.0 * t2 - t), 0.5 * (3.0 * t3 - 5.0 * t2 + 2.0),
                 0.5 * (-3.0 * t3 + 4.0 * t2 + t), 0.5 * (t3 - t2)};
    for (int k = 0; k < 4; ++k) {
      tp.index[static_cast<std::size_t>(k)] = std::clamp(static_cast<int>(base) - 1 + k, 0, in_size - 1);
    }
  }
  return taps;
}

}  // namespace

SpectralCube bicubic_upsample_cube(const SpectralCube& lr, int factor) {
  if (factor < 1) throw ContractError("upsampling factor must be >= 1");
  const auto ty = cubic_taps(lr.height, factor);
  const auto tx = cubic_taps(lr.width, factor);
  SpectralCube hr(lr.channels, lr.height * factor, lr.width * factor);
  std::vector<double> rows(static_cast<std::size_t>(lr.height) * hr.width);
  for (int ch = 0; ch < lr.channels; ++ch) {
    for (int y = 0; y < lr.height; ++y) {
      for (int x = 0; x < hr.width; ++x) {
        const Taps& t = tx[static_cast<std::size_t>(x)];
        double acc = 0.0;
        for (int k = 0; k < 4; ++k) acc += t.weight[static_cast<std::size_t>(k)] * lr.at(ch, y, t.index[static_cast<std::size_t>(k)]);
        rows[static_cast<std::size_t>(y) * hr.width + x] = acc;
      }
    }
    for (int y = 0; y < hr.height; ++y) {
      const Taps& t = ty[static_cast<std::size_t>(y)];
      for (int x = 0; x < hr.width; ++x) {
        double acc = 0.0;
        for (int k = 0; k < 4; ++k) {
          acc += t.weight[static_cast<std::size_t>(k)] * rows[static_cast<std::size_t>(t.index[static_cast<std::size_t>(k)]) * hr.width + x];
        }
        hr.at(ch, y, x) = acc;
      }
    }
  }
  return hr;
}

Tensor mosaics_to_tensor(const std::vector<MosaicImage>& mosaics) {
  if (mosaics.empty()) throw DimensionError("mosaics_to_tensor: empty batch");
  const int h = mosaics.front().height;
  const int w = mosaics.front().width;
  std::vector<double> data;
  data.reserve(mosaics.size() * static_cast<std::size_t>(h) * w);
  for (const MosaicImage& m : mosaics) {
    if (m.height != h || m.width != w) throw DimensionError("mosaics_to_tensor: ragged batch");
    data.insert(data.end(), m.data.begin(), m.data.end());
  }
  return Tensor::from_data({static_cast<int64_t>(mosaics.size()), 1, h, w}, std::move(data));
}

MosaicImage tensor_to_mosaic(const Tensor& t, int64_t n) {
  const Shape s = t.shape();
  if (s.c != 1 || n < 0 || n >= s.n) {
    throw DimensionError("tensor_to_mosaic: cannot take sample " + std::to_string(n) + " of " + s.str());
  }
  MosaicImage m(static_cast<int>(s.h), static_cast<int>(s.w));
  auto src = t.data().subspan(static_cast<std::size_t>(n * s.plane()), static_cast<std::size_t>(s.plane()));
  std::copy(src.begin(), src.end(), m.data.begin());
  return m;
}

}  // namespace msfan
