#include "msfan/layers.hpp"

#include <cmath>
#include <random>

#include "msfan/errors.hpp"
#include "msfan/ops.hpp"

namespace msfan {

void ModelConfig::validate() const {
  if (groups < 1) throw ConfigError("model.groups must be >= 1");
  if (blocks < 1) throw ConfigError("model.blocks must be >= 1");
  if (channels < 1) throw ConfigError("model.channels must be >= 1");
  if (scale < 1) throw ConfigError("model.scale must be >= 1");
  if (use_ca) {
    if (ca_reduction < 1 || ca_reduction > channels) {
      throw ConfigError("model.ca_reduction must lie in [1, channels]");
    }
    if (channels % ca_reduction != 0) {
      throw ConfigError("model.channels (" + std::to_string(channels) +
                        ") is not divisible by model.ca_reduction (" +
                        std::to_string(ca_reduction) + ")");
    }
  }
  if (use_multifan && groups < 3) {
    throw ConfigError("model.use_multifan requires model.groups >= 3");
  }
}

std::string ModelConfig::variant_name() const {
  std::string name = use_ca ? "RCAN" : "RIRN";
  if (use_multifan) name += "+Multi-FAN";
  return name;
}

// ---------------------------------------------------------------------------

void LayerParams::add(const std::string& path, Tensor tensor) {
  if (index_.count(path) != 0) throw ConfigError("duplicate parameter path " + path);
  index_[path] = entries_.size();
  entries_.emplace_back(path, std::move(tensor));
}

const Tensor& LayerParams::get(const std::string& path) const {
  auto it = index_.find(path);
  if (it == index_.end()) throw ConfigError("unknown parameter path " + path);
  return entries_[it->second].second;
}

Tensor& LayerParams::get(const std::string& path) {
  auto it = index_.find(path);
  if (it == index_.end()) throw ConfigError("unknown parameter path " + path);
  return entries_[it->second].second;
}

int64_t LayerParams::scalar_count() const {
  int64_t total = 0;
  for (const auto& [path, t] : entries_) total += t.numel();
  return total;
}

void LayerParams::zero_grad() {
  for (auto& [path, t] : entries_) t.zero_grad();
}

LayerParams LayerParams::clone() const {
  LayerParams copy;
  for (const auto& [path, t] : entries_) {
    Tensor c = t.clone();
    c.set_requires_grad(t.requires_grad());
    copy.add(path, c);
  }
  return copy;
}

// ---------------------------------------------------------------------------

namespace {

void add_conv(std::vector<ParamSpec>& out, const std::string& prefix, int64_t cin, int64_t cout,
              int64_t k) {
  out.push_back({prefix + ".weight", {cout, cin, k, k}, cin * k * k});
  out.push_back({prefix + ".bias", {1, cout, 1, 1}, 0});
}

// Transposed convolution weights are stored cin x cout x k x k. With stride
// equal to the kernel size every output pixel sees cin taps.
void add_conv_transpose(std::vector<ParamSpec>& out, const std::string& prefix, int64_t cin,
                        int64_t cout, int64_t k) {
  out.push_back({prefix + ".weight", {cin, cout, k, k}, cin});
  out.push_back({prefix + ".bias", {1, cout, 1, 1}, 0});
}

int64_t conv_params(int64_t cin, int64_t cout, int64_t k) { return cin * cout * k * k + cout; }

}  // namespace

std::vector<ParamSpec> param_layout(const ModelConfig& config) {
  config.validate();
  const int64_t c = config.channels;
  const int64_t s = config.scale;
  std::vector<ParamSpec> out;
  add_conv(out, "head", 1, c, 3);
  for (int g = 1; g <= config.groups; ++g) {
    const std::string rg = "rg" + std::to_string(g);
    for (int b = 1; b <= config.blocks; ++b) {
      const std::string rb = rg + ".rb" + std::to_string(b);
      add_conv(out, rb + ".conv1", c, c, 3);
      add_conv(out, rb + ".conv2", c, c, 3);
      if (config.use_ca) {
        const int64_t squeezed = c / config.ca_reduction;
        add_conv(out, rb + ".ca.down", c, squeezed, 1);
        add_conv(out, rb + ".ca.up", squeezed, c, 1);
      }
    }
    add_conv(out, rg + ".conv", c, c, 3);
  }
  add_conv(out, "body", c, c, 3);
  add_conv_transpose(out, "tail.up", c, c, s);
  add_conv(out, "tail.conv", c, 1, 3);
  if (config.use_multifan) {
    const int64_t aggregate = static_cast<int64_t>(config.groups - 1) * c;
    add_conv(out, "mf.conv1", aggregate, kMultiFanWidth1, 3);
    add_conv_transpose(out, "mf.up", kMultiFanWidth1, kMultiFanWidth2, s);
    add_conv(out, "mf.conv2", kMultiFanWidth2, 1, 3);
    add_conv(out, "mf.merge", 2, 1, 3);
  }
  return out;
}

LayerParams init_params(const ModelConfig& config, uint64_t seed) {
  std::mt19937_64 rng(seed);
  LayerParams params;
  for (const ParamSpec& spec : param_layout(config)) {
    std::vector<double> values(static_cast<std::size_t>(spec.shape.numel()), 0.0);
    if (spec.fan_in > 0) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(spec.fan_in));
      std::uniform_real_distribution<double> dist(-bound, bound);
      for (double& v : values) v = dist(rng);
    }
    params.add(spec.path, Tensor::from_data(spec.shape, std::move(values), true));
  }
  return params;
}

int64_t ca_param_count(int channels, int reduction) {
  const int64_t c = channels;
  const int64_t squeezed = c / reduction;
  return conv_params(c, squeezed, 1) + conv_params(squeezed, c, 1);
}

int64_t param_count(const ModelConfig& config) {
  config.validate();
  const int64_t c = config.channels;
  const int64_t s = config.scale;
  const int64_t block = 2 * conv_params(c, c, 3) +
                        (config.use_ca ? ca_param_count(config.channels, config.ca_reduction) : 0);
  const int64_t group = config.blocks * block + conv_params(c, c, 3);
  int64_t total = conv_params(1, c, 3)                 // head
                  + config.groups * group              // residual groups
                  + conv_params(c, c, 3)               // body
                  + (c * c * s * s + c)                // tail transposed conv
                  + conv_params(c, 1, 3);              // tail output conv
  if (config.use_multifan) {
    total += conv_params((config.groups - 1) * c, kMultiFanWidth1, 3) +
             (int64_t{kMultiFanWidth1} * kMultiFanWidth2 * s * s + kMultiFanWidth2) +
             conv_params(kMultiFanWidth2, 1, 3) + conv_params(2, 1, 3);
  }
  return total;
}

// ---------------------------------------------------------------------------

Tensor conv3x3(const Tensor& x, const LayerParams& params, const std::string& prefix) {
  return conv2d(x, params.get(prefix + ".weight"), params.get(prefix + ".bias"), 1, 1);
}

Tensor channel_attention(const Tensor& u, const LayerParams& params, const std::string& prefix) {
  Tensor pooled = global_avg_pool(u);
  Tensor squeezed = relu(conv2d(pooled, params.get(prefix + ".down.weight"),
                                params.get(prefix + ".down.bias"), 1, 0));
  Tensor gate = sigmoid(conv2d(squeezed, params.get(prefix + ".up.weight"),
                               params.get(prefix + ".up.bias"), 1, 0));
  return mul_channelwise(u, gate);
}

Tensor residual_block(const Tensor& f, const LayerParams& params, const std::string& prefix,
                      bool use_ca) {
  Tensor r = conv3x3(relu(conv3x3(f, params, prefix + ".conv1")), params, prefix + ".conv2");
  if (use_ca) r = channel_attention(r, params, prefix + ".ca");
  return add(f, r);
}

Tensor residual_group(const Tensor& f, const LayerParams& params, const std::string& prefix,
                      int blocks, bool use_ca) {
  if (blocks < 1) throw ConfigError("residual_group needs at least one block");
  Tensor x = f;
  for (int b = 1; b <= blocks; ++b) {
    x = residual_block(x, params, prefix + ".rb" + std::to_string(b), use_ca);
  }
  return add(f, conv3x3(x, params, prefix + ".conv"));
}

}  // namespace msfan
