#include "msfan/cube_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <vector>

#include "msfan/errors.hpp"

namespace msfan {

namespace {

template <typename T>
void put_le(std::vector<unsigned char>& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<unsigned char>((static_cast<uint64_t>(value) >> (8 * i)) & 0xFFu));
  }
}

template <typename T>
T get_le(const unsigned char* p) {
  uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<uint64_t>(p[i]) << (8 * i);
  return static_cast<T>(v);
}

std::size_t sample_bytes(SampleType type) {
  switch (type) {
    case SampleType::kFloat64: return 8;
    case SampleType::kUInt16: return 2;
    case SampleType::kFloat32: return 4;
  }
  return 0;
}

std::vector<unsigned char> read_all(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(IoError::Kind::kOpen, "cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

CubeHeader parse_header(const std::vector<unsigned char>& bytes, const std::string& path) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kCubeMagic, 4) != 0) {
    throw IoError(IoError::Kind::kBadMagic, path + ": not a cube file (bad magic)");
  }
  if (bytes.size() < kCubeHeaderBytes) {
    throw IoError(IoError::Kind::kTruncated, path + ": file shorter than header");
  }
  CubeHeader h;
  h.version = get_le<uint16_t>(bytes.data() + 4);
  if (h.version != kCubeVersion) {
    throw IoError(IoError::Kind::kBadVersion,
                  path + ": unsupported cube version " + std::to_string(h.version));
  }
  h.channels = get_le<uint16_t>(bytes.data() + 6);
  h.height = get_le<uint32_t>(bytes.data() + 8);
  h.width = get_le<uint32_t>(bytes.data() + 12);
  const auto type = get_le<uint16_t>(bytes.data() + 16);
  if (type < 1 || type > 3) {
    throw IoError(IoError::Kind::kFormat, path + ": unknown sample type " + std::to_string(type));
  }
  h.type = static_cast<SampleType>(type);
  return h;
}

void write_raster(const std::string& path, int channels, int height, int width,
                  const std::vector<double>& data, SampleType type) {
  if (channels < 0 || channels > 0xFFFF || height < 0 || width < 0) {
    throw ContractError("raster extents out of range for the cube format");
  }
  std::vector<unsigned char> out;
  out.reserve(kCubeHeaderBytes + data.size() * sample_bytes(type));
  out.insert(out.end(), kCubeMagic, kCubeMagic + 4);
  put_le<uint16_t>(out, kCubeVersion);
  put_le<uint16_t>(out, static_cast<uint16_t>(channels));
  put_le<uint32_t>(out, static_cast<uint32_t>(height));
  put_le<uint32_t>(out, static_cast<uint32_t>(width));
  put_le<uint16_t>(out, static_cast<uint16_t>(type));
  for (double v : data) {
    switch (type) {
      case SampleType::kFloat64: put_le<uint64_t>(out, std::bit_cast<uint64_t>(v)); break;
      case SampleType::kFloat32:
        put_le<uint32_t>(out, std::bit_cast<uint32_t>(static_cast<float>(v)));
        break;
      case SampleType::kUInt16:
        put_le<uint16_t>(out, static_cast<uint16_t>(std::lround(std::clamp(v, 0.0, 1.0) * 65535.0)));
        break;
    }
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError(IoError::Kind::kOpen, "cannot write " + path);
  f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError(IoError::Kind::kOpen, "write failed for " + path);
}

}  // namespace

CubeHeader read_cube_header(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(IoError::Kind::kOpen, "cannot open " + path);
  std::vector<unsigned char> head(kCubeHeaderBytes);
  in.read(reinterpret_cast<char*>(head.data()), static_cast<std::streamsize>(head.size()));
  head.resize(static_cast<std::size_t>(in.gcount()));
  return parse_header(head, path);
}

SpectralCube load_cube(const std::string& path) {
  const auto bytes = read_all(path);
  const CubeHeader h = parse_header(bytes, path);
  const std::size_t count = static_cast<std::size_t>(h.channels) * h.height * h.width;
  const std::size_t width = sample_bytes(h.type);
  if (bytes.size() < kCubeHeaderBytes + count * width) {
    throw IoError(IoError::Kind::kTruncated,
                  path + ": payload truncated (" + std::to_string(bytes.size() - kCubeHeaderBytes) +
                      " of " + std::to_string(count * width) + " bytes)");
  }
  if (bytes.size() > kCubeHeaderBytes + count * width) {
    throw IoError(IoError::Kind::kFormat, path + ": trailing bytes after payload");
  }
  SpectralCube cube(h.channels, static_cast<int>(h.height), static_cast<int>(h.width));
  const unsigned char* p = bytes.data() + kCubeHeaderBytes;
  for (std::size_t i = 0; i < count; ++i, p += width) {
    switch (h.type) {
      case SampleType::kFloat64: cube.data[i] = std::bit_cast<double>(get_le<uint64_t>(p)); break;
      case SampleType::kFloat32: cube.data[i] = std::bit_cast<float>(get_le<uint32_t>(p)); break;
      case SampleType::kUInt16: cube.data[i] = get_le<uint16_t>(p) / 65535.0; break;
    }
  }
  return cube;
}

void save_cube(const SpectralCube& cube, const std::string& path, SampleType type) {
  write_raster(path, cube.channels, cube.height, cube.width, cube.data, type);
}

MosaicImage load_mosaic(const std::string& path) {
  SpectralCube raster = load_cube(path);
  if (raster.channels != 1) {
    throw IoError(IoError::Kind::kFormat,
                  path + ": expected a single-channel mosaic, found " +
                      std::to_string(raster.channels) + " channels");
  }
  MosaicImage m;
  m.height = raster.height;
  m.width = raster.width;
  m.data = std::move(raster.data);
  return m;
}

void save_mosaic(const MosaicImage& mosaic, const std::string& path, SampleType type) {
  write_raster(path, 1, mosaic.height, mosaic.width, mosaic.data, type);
}

}  // namespace msfan
