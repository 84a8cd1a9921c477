#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "msfan/errors.hpp"
#include "msfan/metrics.hpp"
#include "oracles.hpp"

using namespace msfan;

TEST(Psnr, ClosedForm) {
  SpectralCube a(14, 4, 4, 0.5), b(14, 4, 4, 0.6);
  EXPECT_NEAR(psnr(a, b), 20.0, 1e-9);  // MSE = 0.01
  EXPECT_EQ(psnr(a, a), kPsnrPerfect);
  EXPECT_TRUE(std::isinf(psnr(a, a)));
  EXPECT_THROW(psnr(a, SpectralCube(14, 4, 5)), DimensionError);
}

TEST(Psnr, DecreasesWithNoiseAmplitude) {
  std::mt19937_64 rng(1);
  const SpectralCube target = oracle::random_cube(14, 8, 8, rng);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> noise(target.data.size());
  for (double& v : noise) v = normal(rng);
  double previous = kPsnrPerfect;
  for (double amp : {0.001, 0.003, 0.01, 0.03, 0.1, 0.3}) {
    SpectralCube noisy = target;
    for (std::size_t i = 0; i < noise.size(); ++i) noisy.data[i] += amp * noise[i];
    const double p = psnr(noisy, target);
    EXPECT_LT(p, previous);
    previous = p;
  }
}

TEST(Ssim, IdenticalIsExactlyOne) {
  std::mt19937_64 rng(2);
  const SpectralCube a = oracle::random_cube(14, 10, 12, rng);
  const MetricReport r = evaluate_cubes(a, a);
  EXPECT_EQ(r.ssim, 1.0);
  ASSERT_EQ(r.per_channel_ssim.size(), 14u);
  for (double s : r.per_channel_ssim) EXPECT_EQ(s, 1.0);
  EXPECT_TRUE(std::isinf(r.psnr_db));
}

TEST(Ssim, InvertedImageScoresBelowOne) {
  std::mt19937_64 rng(3);
  const SpectralCube a = oracle::random_cube(1, 16, 16, rng);
  SpectralCube inv = a;
  for (double& v : inv.data) v = 1.0 - v;
  EXPECT_LT(ssim_plane(a.data, inv.data, 16, 16), 1.0);
}

TEST(Ssim, SymmetricAndBounded) {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 10; ++i) {
    const SpectralCube a = oracle::random_cube(1, 9, 14, rng);
    const SpectralCube b = oracle::random_cube(1, 9, 14, rng);
    const double ab = ssim_plane(a.data, b.data, 9, 14);
    EXPECT_NEAR(ab, ssim_plane(b.data, a.data, 9, 14), 1e-14);
    EXPECT_GE(ab, -1.0);
    EXPECT_LE(ab, 1.0);
  }
}

TEST(Ssim, MatchesBruteForceWindows) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 5; ++i) {
    const SpectralCube a = oracle::random_cube(14, 32, 32, rng);
    const SpectralCube b = oracle::random_cube(14, 32, 32, rng);
    const MetricReport r = evaluate_cubes(a, b);
    double mean = 0;
    for (int c = 0; c < 14; ++c) {
      const double ref = oracle::ssim_plane(a.data.data() + c * 1024, b.data.data() + c * 1024, 32, 32);
      EXPECT_NEAR(r.per_channel_ssim[static_cast<std::size_t>(c)], ref, 1e-9);
      mean += ref;
    }
    EXPECT_NEAR(r.ssim, mean / 14.0, 1e-9);
  }
}

TEST(Ssim, RejectsImagesSmallerThanWindow) {
  std::vector<double> v(6 * 20, 0.5);
  EXPECT_THROW(ssim_plane(v, v, 6, 20), DimensionError);
}

TEST(Report, JsonLineAndAggregate) {
  MetricReport r;
  r.id = "7";
  r.psnr_db = kPsnrPerfect;
  r.ssim = 1.0;
  r.per_channel_ssim.assign(14, 1.0);
  const std::string line = r.to_json_line();
  EXPECT_NE(line.find("\"inf\""), std::string::npos);
  EXPECT_EQ(line.find('\n'), std::string::npos);

  const Aggregate a = aggregate({1.0, 2.0, 3.0, 6.0});
  EXPECT_NEAR(a.mean, 3.0, 1e-12);
  EXPECT_NEAR(a.stddev, std::sqrt((4.0 + 1.0 + 0.0 + 9.0) / 4.0), 1e-12);
}
