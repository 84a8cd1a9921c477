#include <cmath>

#include "msfan/errors.hpp"
#include "msfan/training.hpp"

namespace msfan {

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (crop_lr < 4 || crop_lr % 4 != 0) throw ConfigError("train.crop_lr must be a positive multiple of 4");
  if (!(lr0 > 0.0)) throw ConfigError("train.lr0 must be > 0");
  if (halve_every < 1) throw ConfigError("train.halve_every must be >= 1");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0) || !(adam.beta2 >= 0.0 && adam.beta2 < 1.0)) {
    throw ConfigError("train.beta1 and train.beta2 must lie in [0, 1)");
  }
  if (!(adam.epsilon > 0.0)) throw ConfigError("train.adam_eps must be > 0");
  if (!(rotation_p >= 0.0 && 3.0 * rotation_p <= 1.0)) {
    throw ConfigError("train.rotation_p must lie in [0, 1/3]");
  }
  if (!(hflip_p >= 0.0 && hflip_p <= 1.0)) throw ConfigError("train.hflip_p must lie in [0, 1]");
  if (epochs < 0) throw ConfigError("train.epochs must be >= 0");
  if (max_steps < 0) throw ConfigError("train.max_steps must be >= 0");
  if (val_every < 1) throw ConfigError("train.val_every must be >= 1");
  loss.validate();
  model.validate();
}

double lr_at(int epoch, const TrainConfig& config) {
  if (epoch < 0) throw ContractError("lr_at: epoch must be >= 0");
  return config.lr0 * std::pow(0.5, epoch / config.halve_every);
}

AdamState AdamState::for_params(const LayerParams& params) {
  AdamState s;
  for (const auto& [path, t] : params.entries()) {
    s.m.emplace_back(static_cast<std::size_t>(t.numel()), 0.0);
    s.v.emplace_back(static_cast<std::size_t>(t.numel()), 0.0);
  }
  return s;
}

void adam_step(LayerParams& params, AdamState& state, double lr, const AdamConfig& config) {
  if (state.m.size() != params.size() || state.v.size() != params.size()) {
    throw DimensionError("ADAM state does not match the parameter set");
  }
  state.t += 1;
  const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.t));
  std::size_t k = 0;
  for (auto& [path, tensor] : params.entries()) {
    auto& m = state.m[k];
    auto& v = state.v[k];
    ++k;
    if (m.size() != static_cast<std::size_t>(tensor.numel())) {
      throw DimensionError("ADAM moment buffer for " + path + " has the wrong size");
    }
    auto p = tensor.mutable_data();
    auto g = tensor.grad();
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double gi = g.empty() ? 0.0 : g[i];
      m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * gi;
      v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * gi * gi;
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      p[i] -= lr * mhat / (std::sqrt(vhat) + config.epsilon);
    }
  }
}

}  // namespace msfan
