#include "msfan/model.hpp"

#include "msfan/errors.hpp"
#include "msfan/ops.hpp"

namespace msfan {

Model::Model(ModelConfig config, LayerParams params)
    : config_(config), params_(std::move(params)) {
  config_.validate();
  const auto layout = param_layout(config_);
  if (layout.size() != params_.size()) {
    throw ConfigError("parameter set has " + std::to_string(params_.size()) +
                      " tensors, topology expects " + std::to_string(layout.size()));
  }
  for (const ParamSpec& spec : layout) {
    if (!params_.contains(spec.path)) throw ConfigError("missing parameter " + spec.path);
    const Shape actual = params_.get(spec.path).shape();
    if (actual != spec.shape) {
      throw ConfigError("parameter " + spec.path + " has shape " + actual.str() +
                        ", expected " + spec.shape.str());
    }
  }
  if (config_.use_multifan) {
    const int64_t expected = static_cast<int64_t>(config_.groups - 1) * config_.channels;
    if (params_.get("mf.conv1.weight").shape().c != expected) {
      throw ConfigError("Multi-FAN head must consume (g-1)*C = " + std::to_string(expected) +
                        " channels");
    }
  }
}

ForwardOutputs Model::forward(const Tensor& x) const {
  const Shape in = x.shape();
  if (in.c != 1 || in.n < 1) {
    throw ContractError("model input must be n x 1 x h x w, got " + in.str());
  }
  if (in.h % 4 != 0 || in.w % 4 != 0 || in.h == 0 || in.w == 0) {
    throw ContractError("model input height and width must be positive multiples of 4, got " +
                        in.str());
  }
  const LayerParams& p = params_;
  ForwardOutputs out;

  Tensor f0 = conv3x3(x, p, "head");
  Tensor f = f0;
  for (int g = 1; g <= config_.groups; ++g) {
    f = residual_group(f, p, "rg" + std::to_string(g), config_.blocks, config_.use_ca);
    out.rg_features.push_back(f);
  }
  out.f_final = add(conv3x3(f, p, "body"), f0);

  Tensor up = conv_transpose2d(out.f_final, p.get("tail.up.weight"), p.get("tail.up.bias"),
                               config_.scale);
  out.sr1 = conv3x3(up, p, "tail.conv");

  if (config_.use_multifan) {
    // RG_2 .. RG_{g-1} (1-based) followed by the long-skip features.
    std::vector<Tensor> parts(out.rg_features.begin() + 1, out.rg_features.end() - 1);
    parts.push_back(out.f_final);
    out.aggregate = concat_channels(parts);
    Tensor h = relu(conv3x3(*out.aggregate, p, "mf.conv1"));
    h = relu(conv_transpose2d(h, p.get("mf.up.weight"), p.get("mf.up.bias"), config_.scale));
    out.sr2 = conv3x3(h, p, "mf.conv2");
    out.sr_out = conv3x3(concat_channels({out.sr1, *out.sr2}), p, "mf.merge");
  }
  return out;
}

Model build(const ModelConfig& config, uint64_t seed) {
  return Model(config, init_params(config, seed));
}

int64_t count_head_flops(const ModelConfig& config, const Shape& input) {
  if (!config.use_multifan) return 0;
  const int64_t c = config.channels;
  const int s = config.scale;
  const Shape lr{input.n, (config.groups - 1) * c, input.h, input.w};
  const Shape hr_wide{input.n, kMultiFanWidth2, input.h * s, input.w * s};
  const Shape hr_pair{input.n, 2, input.h * s, input.w * s};
  return conv2d_macs(lr, kMultiFanWidth1, 3, 1, 1) +
         conv_transpose2d_macs({input.n, kMultiFanWidth1, input.h, input.w}, kMultiFanWidth2, s) +
         conv2d_macs(hr_wide, 1, 3, 1, 1) + conv2d_macs(hr_pair, 1, 3, 1, 1);
}

int64_t count_flops(const ModelConfig& config, const Shape& input) {
  config.validate();
  const int64_t c = config.channels;
  const int s = config.scale;
  const Shape feat{input.n, c, input.h, input.w};
  const int64_t conv = conv2d_macs(feat, c, 3, 1, 1);

  int64_t ca = 0;
  if (config.use_ca) {
    const int64_t squeezed = c / config.ca_reduction;
    // pooling + 1x1 squeeze + 1x1 expand + channelwise rescale
    ca = input.n * c * input.h * input.w + input.n * c * squeezed * 2 +
         input.n * c * input.h * input.w;
  }
  const int64_t block = 2 * conv + ca;
  const int64_t group = config.blocks * block + conv;

  int64_t total = conv2d_macs({input.n, 1, input.h, input.w}, c, 3, 1, 1);
  total += config.groups * group;
  total += conv;  // body
  total += conv_transpose2d_macs(feat, c, s);
  total += conv2d_macs({input.n, c, input.h * s, input.w * s}, 1, 3, 1, 1);
  total += count_head_flops(config, input);
  return total;
}

}  // namespace msfan
