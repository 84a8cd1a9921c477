#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "msfan/model_config.hpp"
#include "msfan/tensor.hpp"

namespace msfan {

/// Name and shape of one registered parameter tensor.
struct ParamSpec {
  std::string path;  // e.g. "rg3.rb2.conv1.weight"
  Shape shape;
  int64_t fan_in = 0;  // 0 for biases
};

/// Ordered registry of named parameter tensors. Iteration follows
/// registration order, which is also the checkpoint order.
class LayerParams {
 public:
  void add(const std::string& path, Tensor tensor);
  const Tensor& get(const std::string& path) const;
  Tensor& get(const std::string& path);
  bool contains(const std::string& path) const { return index_.count(path) != 0; }

  std::size_t size() const { return entries_.size(); }
  /// Total number of scalars over all registered tensors.
  int64_t scalar_count() const;

  const std::vector<std::pair<std::string, Tensor>>& entries() const { return entries_; }
  std::vector<std::pair<std::string, Tensor>>& entries() { return entries_; }

  void zero_grad();
  /// Deep copy; the result shares no storage with *this.
  LayerParams clone() const;

 private:
  std::vector<std::pair<std::string, Tensor>> entries_;
  std::map<std::string, std::size_t> index_;
};

/// Every parameter the configured network registers, in order.
std::vector<ParamSpec> param_layout(const ModelConfig& config);

/// Fan-in scaled uniform weights U(-1/sqrt(fan_in), 1/sqrt(fan_in)), zero
/// biases. Deterministic for a given seed.
LayerParams init_params(const ModelConfig& config, uint64_t seed);

/// Closed-form parameter count, independent of param_layout.
int64_t param_count(const ModelConfig& config);

/// Parameters contributed by one channel attention unit.
int64_t ca_param_count(int channels, int reduction);

/// u * sigmoid(up(relu(down(gap(u))))). Expects "<prefix>.down" and
/// "<prefix>.up" 1x1 convolutions in `params`.
Tensor channel_attention(const Tensor& u, const LayerParams& params, const std::string& prefix);

/// f + [CA](conv2(relu(conv1(f)))).
Tensor residual_block(const Tensor& f, const LayerParams& params, const std::string& prefix,
                      bool use_ca);

/// f + conv(RB_b(...RB_1(f)...)).
Tensor residual_group(const Tensor& f, const LayerParams& params, const std::string& prefix,
                      int blocks, bool use_ca);

/// 3x3 "same" convolution using "<prefix>.weight" and "<prefix>.bias".
Tensor conv3x3(const Tensor& x, const LayerParams& params, const std::string& prefix);

}  // namespace msfan
