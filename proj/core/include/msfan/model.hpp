#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "msfan/layers.hpp"
#include "msfan/model_config.hpp"
#include "msfan/tensor.hpp"

namespace msfan {

/// Everything one forward pass exposes. sr2, sr_out and aggregate are set
/// exactly when the Multi-FAN head is enabled.
struct ForwardOutputs {
  Tensor sr1;
  std::optional<Tensor> sr2;
  std::optional<Tensor> sr_out;
  std::vector<Tensor> rg_features;  // output of each residual group, in order
  Tensor f_final;                   // long-skip sum fed to the upsampling tail
  std::optional<Tensor> aggregate;  // concatenated input of the Multi-FAN head

  /// SR_out when present, otherwise SR1.
  const Tensor& prediction() const { return sr_out ? *sr_out : sr1; }
};

/// Residual-in-residual backbone with an optional multi-scale feature
/// aggregation head.
///
/// Backbone: head conv (1 -> C), g residual groups, body conv, long skip from
/// the head, then a stride-`scale` transposed conv and a 3x3 conv to one
/// channel (SR1). The head concatenates the outputs of RG_2 .. RG_{g-1} with
/// the long-skip features, decodes them through conv(64) -> ReLU ->
/// convT(32) -> ReLU -> conv(1) into SR2, and merges SR1 and SR2 with a 3x3
/// conv into SR_out.
class Model {
 public:
  Model(ModelConfig config, LayerParams params);

  const ModelConfig& config() const { return config_; }
  const LayerParams& params() const { return params_; }
  LayerParams& params() { return params_; }

  /// `x` must be n x 1 x h x w with h and w multiples of 4.
  ForwardOutputs forward(const Tensor& x) const;

 private:
  ModelConfig config_;
  LayerParams params_;
};

/// Validates the config, initializes parameters and checks head wiring.
Model build(const ModelConfig& config, uint64_t seed);

/// Multiply-accumulate count of one forward pass over an input of the given
/// shape, including the elementwise work of channel attention.
int64_t count_flops(const ModelConfig& config, const Shape& input);

/// MACs of the Multi-FAN head alone (zero when disabled).
int64_t count_head_flops(const ModelConfig& config, const Shape& input);

}  // namespace msfan
