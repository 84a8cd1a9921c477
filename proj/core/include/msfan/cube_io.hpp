#pragma once

#include <cstdint>
#include <string>

#include "msfan/mosaic.hpp"

namespace msfan {

/// Sample encoding of a cube file payload.
enum class SampleType : uint16_t {
  kFloat64 = 1,
  kUInt16 = 2,  // normalized by 65535 on load
  kFloat32 = 3,
};

inline constexpr char kCubeMagic[4] = {'M', 'S', 'I', 'C'};
inline constexpr uint16_t kCubeVersion = 1;
inline constexpr std::size_t kCubeHeaderBytes = 18;

/// Cube file header. All fields little-endian:
///
///   offset  size  field
///   0       4     magic "MSIC"
///   4       2     version (u16, currently 1)
///   6       2     channels (u16)
///   8       4     height (u32)
///   12      4     width (u32)
///   16      2     sample type (u16, see SampleType)
///   18      ...   payload, channel-major then row-major
///
/// Mosaics use the same container with channels = 1.
struct CubeHeader {
  uint16_t version = kCubeVersion;
  uint16_t channels = 0;
  uint32_t height = 0;
  uint32_t width = 0;
  SampleType type = SampleType::kFloat64;
};

CubeHeader read_cube_header(const std::string& path);

/// Loads any cube file; 16-bit payloads are mapped into [0, 1].
SpectralCube load_cube(const std::string& path);
void save_cube(const SpectralCube& cube, const std::string& path,
               SampleType type = SampleType::kFloat64);

MosaicImage load_mosaic(const std::string& path);
void save_mosaic(const MosaicImage& mosaic, const std::string& path,
                 SampleType type = SampleType::kFloat64);

}  // namespace msfan
