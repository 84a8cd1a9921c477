#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "msfan/errors.hpp"
#include "msfan/layers.hpp"
#include "msfan/model.hpp"
#include "msfan/ops.hpp"
#include "oracles.hpp"

using namespace msfan;

namespace {

LayerParams zero_params(const ModelConfig& c) {
  LayerParams p;
  for (const ParamSpec& s : param_layout(c)) p.add(s.path, Tensor::zeros(s.shape));
  return p;
}

int64_t registry_count(const ModelConfig& c) {
  int64_t n = 0;
  for (const ParamSpec& s : param_layout(c)) n += s.shape.numel();
  return n;
}

ModelConfig config(int g, int b, bool ca, bool mf, int channels = 64) {
  ModelConfig c;
  c.groups = g;
  c.blocks = b;
  c.channels = channels;
  c.use_ca = ca;
  c.use_multifan = mf;
  return c;
}

}  // namespace

TEST(ParamCount, ChannelAttentionUnit) { EXPECT_EQ(ca_param_count(64, 16), 580); }

TEST(ParamCount, BlockAndGroupArithmetic) {
  // One group of the network with and without CA, read off the registry.
  const auto group_size = [](int b, bool ca) {
    int64_t n = 0;
    for (const ParamSpec& s : param_layout(config(3, b, ca, false))) {
      if (s.path.rfind("rg1.", 0) == 0) n += s.shape.numel();
    }
    return n;
  };
  int64_t block = 0;
  for (const ParamSpec& s : param_layout(config(3, 1, false, false))) {
    if (s.path.rfind("rg1.rb1.", 0) == 0) block += s.shape.numel();
  }
  EXPECT_EQ(block, 73856);
  int64_t block_ca = 0;
  for (const ParamSpec& s : param_layout(config(3, 1, true, false))) {
    if (s.path.rfind("rg1.rb1.", 0) == 0) block_ca += s.shape.numel();
  }
  EXPECT_EQ(block_ca, 74436);
  EXPECT_EQ(group_size(3, false), 258496);
  EXPECT_EQ(group_size(20, true), 1525648);
}

TEST(ParamCount, TableFiveConfigurations) {
  EXPECT_EQ(param_count(config(5, 3, true, false)), 1376253);
  EXPECT_EQ(param_count(config(5, 3, false, false)), 1367553);
  EXPECT_EQ(param_count(config(5, 3, false, true)), 1533845);
  EXPECT_EQ(param_count(config(10, 20, true, false)), 15331553);
  EXPECT_EQ(param_count(config(10, 20, false, false)), 15215553);
  EXPECT_EQ(param_count(config(10, 20, false, true)), 15566165);
  EXPECT_EQ(param_count(config(5, 3, true, false)) - param_count(config(5, 3, false, false)), 8700);
}

TEST(ParamCount, ClosedFormMatchesRegistryAcrossMatrix) {
  for (int g : {2, 5, 10})
    for (int b : {1, 3, 20})
      for (bool ca : {false, true})
        for (bool mf : {false, true}) {
          if (mf && g < 3) {
            EXPECT_THROW(config(g, b, ca, mf).validate(), ConfigError);
            continue;
          }
          const ModelConfig c = config(g, b, ca, mf);
          EXPECT_EQ(param_count(c), registry_count(c)) << c.variant_name() << " g=" << g << " b=" << b;
          const int64_t toggle = param_count(config(g, b, true, mf)) - param_count(config(g, b, false, mf));
          EXPECT_EQ(toggle, int64_t{g} * b * (64 * 64 * 2 / 16 + 64 / 16 + 64));
        }
}

TEST(ParamCount, InitRegistersEveryScalar) {
  const ModelConfig c = config(3, 2, true, true, 16);
  EXPECT_EQ(init_params(c, 0).scalar_count(), param_count(c));
}

TEST(Params, KernelSizes) {
  for (const ParamSpec& s : param_layout(config(5, 3, true, true))) {
    if (s.path.find(".weight") == std::string::npos) continue;
    const bool attention = s.path.find(".ca.") != std::string::npos;
    EXPECT_EQ(s.shape.h, attention ? 1 : 3) << s.path;
    EXPECT_EQ(s.shape.w, attention ? 1 : 3) << s.path;
  }
}

TEST(Params, InitDeterministicPerSeed) {
  const ModelConfig c = config(3, 1, true, true, 16);
  const LayerParams a = init_params(c, 11), b = init_params(c, 11), d = init_params(c, 12);
  bool differs = false;
  for (std::size_t i = 0; i < a.entries().size(); ++i) {
    const auto& ta = a.entries()[i].second;
    EXPECT_EQ(oracle::to_vec(ta), oracle::to_vec(b.entries()[i].second));
    differs |= oracle::to_vec(ta) != oracle::to_vec(d.entries()[i].second);
  }
  EXPECT_TRUE(differs);
}

TEST(Params, InitFanInBoundsAndZeroBias) {
  const ModelConfig c = config(3, 1, true, true, 16);
  const LayerParams p = init_params(c, 3);
  for (const ParamSpec& s : param_layout(c)) {
    const auto v = oracle::to_vec(p.get(s.path));
    if (s.fan_in == 0) {
      for (double x : v) EXPECT_EQ(x, 0.0) << s.path;
    } else {
      const double bound = 1.0 / std::sqrt(static_cast<double>(s.fan_in));
      for (double x : v) EXPECT_LE(std::abs(x), bound) << s.path;
    }
  }
}

TEST(ChannelAttention, ZeroParametersHalveTheInput) {
  const ModelConfig c = config(3, 1, true, false);
  const LayerParams p = zero_params(c);
  std::mt19937_64 rng(1);
  Tensor u = oracle::random_tensor({2, 64, 5, 6}, rng);
  Tensor out = channel_attention(u, p, "rg1.rb1.ca");
  for (std::size_t i = 0; i < u.data().size(); ++i) EXPECT_DOUBLE_EQ(out.data()[i], 0.5 * u.data()[i]);
}

TEST(ChannelAttention, ZeroInputStaysZeroAndOutputIsBounded) {
  const ModelConfig c = config(3, 1, true, false, 32);
  const LayerParams p = init_params(c, 5);
  Tensor zero = channel_attention(Tensor::zeros({1, 32, 4, 4}), p, "rg1.rb1.ca");
  for (double v : zero.data()) EXPECT_EQ(v, 0.0);
  std::mt19937_64 rng(2);
  Tensor u = oracle::random_tensor({2, 32, 4, 4}, rng, -3, 3);
  Tensor out = channel_attention(u, p, "rg1.rb1.ca");
  for (std::size_t i = 0; i < u.data().size(); ++i) {
    EXPECT_LE(std::abs(out.data()[i]), std::abs(u.data()[i]));
    EXPECT_GE(out.data()[i] * u.data()[i], 0.0);
  }
}

TEST(ChannelAttention, IndivisibleWidthRejected) {
  ModelConfig c = config(3, 1, true, false, 24);
  EXPECT_THROW(c.validate(), ConfigError);
  c.use_ca = false;
  EXPECT_NO_THROW(c.validate());
}

TEST(Residual, ZeroParametersAreIdentities) {
  for (bool ca : {false, true}) {
    const ModelConfig c = config(3, 2, ca, false, 16);
    const LayerParams p = zero_params(c);
    std::mt19937_64 rng(3);
    Tensor f = oracle::random_tensor({1, 16, 6, 5}, rng);
    EXPECT_EQ(oracle::to_vec(residual_block(f, p, "rg1.rb1", ca)), oracle::to_vec(f));
    EXPECT_EQ(oracle::to_vec(residual_group(f, p, "rg2", 2, ca)), oracle::to_vec(f));
  }
}

TEST(Residual, BlockMatchesComposition) {
  const ModelConfig c = config(3, 1, false, false, 8);
  const LayerParams p = init_params(c, 4);
  std::mt19937_64 rng(4);
  Tensor f = oracle::random_tensor({1, 8, 6, 6}, rng);
  Tensor expect = add(f, conv3x3(relu(conv3x3(f, p, "rg1.rb1.conv1")), p, "rg1.rb1.conv2"));
  EXPECT_EQ(oracle::to_vec(residual_block(f, p, "rg1.rb1", false)), oracle::to_vec(expect));
}

TEST(Init, ActivationScaleStaysBounded) {
  const ModelConfig c = config(5, 3, false, false);
  const Model m = build(c, 0);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(32 * 32);
  for (double& x : v) x = normal(rng);
  const ForwardOutputs out = m.forward(Tensor::from_data({1, 1, 32, 32}, v));
  for (const Tensor& rg : out.rg_features) {
    double mean = 0, sq = 0;
    for (double x : rg.data()) mean += x;
    mean /= static_cast<double>(rg.numel());
    for (double x : rg.data()) sq += (x - mean) * (x - mean);
    const double sd = std::sqrt(sq / static_cast<double>(rg.numel()));
    EXPECT_GE(sd, 0.1);
    EXPECT_LE(sd, 10.0);
  }
}
