#pragma once

#include <string>

namespace msfan {

/// Topology of the super-resolution network. Together with the fixed kernel
/// sizes it determines the parameter count exactly.
struct ModelConfig {
  int groups = 5;            // residual groups (g)
  int blocks = 3;            // residual blocks per group (b)
  int channels = 64;         // feature width (C)
  int scale = 3;
  bool use_ca = false;
  int ca_reduction = 16;
  bool use_multifan = true;

  /// Throws ConfigError on an invalid combination.
  void validate() const;

  /// "RCAN", "RIRN", "RIRN+Multi-FAN" or "RCAN+Multi-FAN".
  std::string variant_name() const;

  bool operator==(const ModelConfig&) const = default;
};

/// Fixed widths of the aggregation head's decoder cascade.
inline constexpr int kMultiFanWidth1 = 64;
inline constexpr int kMultiFanWidth2 = 32;

}  // namespace msfan
