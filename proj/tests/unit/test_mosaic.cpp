#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "msfan/errors.hpp"
#include "msfan/metrics.hpp"
#include "msfan/mosaic.hpp"
#include "oracles.hpp"

using namespace msfan;

TEST(Layout, StandardTable) {
  const MosaicLayout l = MosaicLayout::standard();
  for (int i = 0; i < 14; ++i) EXPECT_EQ(l.cells()[static_cast<std::size_t>(i)], i);
  EXPECT_TRUE(l.is_dead(3, 2));
  EXPECT_TRUE(l.is_dead(3, 3));
  EXPECT_EQ(l.cell_of(13), 13);
}

TEST(Layout, InvariantsEnforced) {
  std::array<int, 16> cells{};
  std::iota(cells.begin(), cells.end(), 0);
  cells[14] = cells[15] = -1;
  EXPECT_NO_THROW(MosaicLayout::from_cells(cells));
  auto three_dead = cells;
  three_dead[0] = -1;
  EXPECT_THROW(MosaicLayout::from_cells(three_dead), ConfigError);
  auto duplicate = cells;
  duplicate[14] = 3;
  EXPECT_THROW(MosaicLayout::from_cells(duplicate), ConfigError);
  auto out_of_range = cells;
  out_of_range[0] = 14;
  EXPECT_THROW(MosaicLayout::from_cells(out_of_range), ConfigError);
}

TEST(Layout, JsonRoundTripAndForms) {
  const MosaicLayout l = MosaicLayout::standard();
  EXPECT_EQ(MosaicLayout::from_json(l.to_json()), l);
  const auto bare = MosaicLayout::from_json("[[13,12,11,10],[9,8,7,6],[5,4,3,2],[1,0,-1,null]]");
  EXPECT_EQ(bare.channel_at(0, 0), 13);
  EXPECT_TRUE(bare.is_dead(3, 2));
  EXPECT_THROW(MosaicLayout::from_json("[[0,1,2,3],[4,5,6,7],[8,9,10,11],[12,-1,-1,-1]]"), ConfigError);
  EXPECT_THROW(MosaicLayout::from_json("[[0,1,2,3]]"), ConfigError);
  EXPECT_THROW(MosaicLayout::from_json("{"), ConfigError);
}

TEST(Codec, PaperGeometry) {
  const MosaicLayout l = MosaicLayout::standard();
  const MosaicImage big = cube_to_mosaic(SpectralCube(14, 240, 480, 0.5), l);
  EXPECT_EQ(big.height, 960);
  EXPECT_EQ(big.width, 1920);
  const MosaicImage lr = cube_to_mosaic(SpectralCube(14, 80, 160, 0.5), l);
  EXPECT_EQ(lr.height, 320);
  EXPECT_EQ(lr.width, 640);
}

TEST(Codec, ConstantCube) {
  const MosaicImage m = cube_to_mosaic(SpectralCube(14, 3, 5, 0.7), MosaicLayout::standard());
  int live = 0, dead = 0;
  for (int y = 0; y < m.height; ++y)
    for (int x = 0; x < m.width; ++x) {
      if (MosaicLayout::standard().is_dead(y % 4, x % 4)) {
        EXPECT_EQ(m.at(y, x), 0.0);
        ++dead;
      } else {
        EXPECT_EQ(m.at(y, x), 0.7);
        ++live;
      }
    }
  EXPECT_EQ(live, 14 * 15);
  EXPECT_EQ(dead, 2 * 15);
}

TEST(Codec, PlacementFormula) {
  std::mt19937_64 rng(1);
  const SpectralCube c = oracle::random_cube(14, 4, 6, rng);
  const MosaicLayout l = MosaicLayout::from_json("[[13,12,11,10],[9,null,8,7],[6,5,4,3],[2,1,0,null]]");
  const MosaicImage m = cube_to_mosaic(c, l);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 6; ++x)
      for (int r = 0; r < 4; ++r)
        for (int col = 0; col < 4; ++col) {
          const int ch = l.channel_at(r, col);
          EXPECT_EQ(m.at(4 * y + r, 4 * x + col), ch < 0 ? 0.0 : c.at(ch, y, x));
        }
}

TEST(Codec, RoundTripIsExact) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 20; ++i) {
    const SpectralCube c = oracle::random_cube(14, 8, 8, rng);
    EXPECT_EQ(mosaic_to_cube(cube_to_mosaic(c, MosaicLayout::standard()), MosaicLayout::standard()), c);
  }
  const SpectralCube zero = mosaic_to_cube(MosaicImage(8, 12), MosaicLayout::standard());
  for (double v : zero.data) EXPECT_EQ(v, 0.0);
  EXPECT_THROW(mosaic_to_cube(MosaicImage(6, 8), MosaicLayout::standard()), ContractError);
  EXPECT_THROW(cube_to_mosaic(SpectralCube(3, 4, 4), MosaicLayout::standard()), DimensionError);
}

TEST(Codec, ConsistentPermutationLeavesMosaicUnchanged) {
  std::mt19937_64 rng(3);
  const SpectralCube c = oracle::random_cube(14, 5, 4, rng);
  std::vector<int> perm(14);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  // Channel k of the permuted cube holds original channel perm[k]; the layout
  // cell that held perm[k] now names k.
  SpectralCube permuted(14, 5, 4);
  std::array<int, 16> cells{};
  const MosaicLayout base = MosaicLayout::standard();
  for (int k = 0; k < 14; ++k) {
    std::copy_n(c.data.begin() + perm[static_cast<std::size_t>(k)] * 20, 20, permuted.data.begin() + k * 20);
  }
  for (int i = 0; i < 16; ++i) {
    const int ch = base.cells()[static_cast<std::size_t>(i)];
    cells[static_cast<std::size_t>(i)] =
        ch < 0 ? -1 : static_cast<int>(std::find(perm.begin(), perm.end(), ch) - perm.begin());
  }
  EXPECT_EQ(cube_to_mosaic(permuted, MosaicLayout::from_cells(cells)), cube_to_mosaic(c, base));
}

TEST(Codec, PsnrMatchesLiveMosaicPixels) {
  std::mt19937_64 rng(4);
  const MosaicLayout l = MosaicLayout::standard();
  for (int i = 0; i < 10; ++i) {
    const SpectralCube a = oracle::random_cube(14, 6, 9, rng);
    const SpectralCube b = oracle::random_cube(14, 6, 9, rng);
    MosaicImage ma = cube_to_mosaic(a, l);
    // Dead pixels must not influence the live-pixel PSNR.
    for (int y = 3; y < ma.height; y += 4) ma.at(y, 2) = 0.9;
    EXPECT_NEAR(psnr(a, b), psnr_live_mosaic(ma, cube_to_mosaic(b, l), l), 1e-10);
  }
}

TEST(Downsample, BoxAverage) {
  const SpectralCube c = downsample_cube(SpectralCube(14, 9, 12, 0.25), 3);
  EXPECT_EQ(c.height, 3);
  EXPECT_EQ(c.width, 4);
  for (double v : c.data) EXPECT_DOUBLE_EQ(v, 0.25);
  const SpectralCube big = downsample_cube(SpectralCube(14, 240, 480), 3);
  EXPECT_EQ(big.height, 80);
  EXPECT_EQ(big.width, 160);
  EXPECT_THROW(downsample_cube(SpectralCube(14, 10, 12), 3), ContractError);

  std::mt19937_64 rng(5);
  const SpectralCube r = oracle::random_cube(14, 12, 24, rng);
  const SpectralCube d = downsample_cube(r, 3);
  const double m0 = std::accumulate(r.data.begin(), r.data.end(), 0.0) / static_cast<double>(r.data.size());
  const double m1 = std::accumulate(d.data.begin(), d.data.end(), 0.0) / static_cast<double>(d.data.size());
  EXPECT_NEAR(m0, m1, 1e-12);
  // Each output value is the mean of its own 3x3 block.
  double block = 0;
  for (int dy = 0; dy < 3; ++dy)
    for (int dx = 0; dx < 3; ++dx) block += r.at(5, 3 + dy, 6 + dx);
  EXPECT_NEAR(d.at(5, 1, 2), block / 9.0, 1e-15);
}

TEST(Bicubic, ReproducesConstants) {
  const SpectralCube c = bicubic_upsample_cube(SpectralCube(14, 5, 7, 0.4), 3);
  EXPECT_EQ(c.height, 15);
  EXPECT_EQ(c.width, 21);
  for (double v : c.data) EXPECT_NEAR(v, 0.4, 1e-15);
}

TEST(Bicubic, ReproducesLinearRampsAwayFromBorders) {
  SpectralCube lr(1, 10, 10);
  for (int y = 0; y < 10; ++y)
    for (int x = 0; x < 10; ++x) lr.at(0, y, x) = 0.1 * x + 0.05 * y;
  const SpectralCube hr = bicubic_upsample_cube(lr, 3);
  for (int y = 6; y < 24; ++y)
    for (int x = 6; x < 24; ++x) {
      const double u = (x + 0.5) / 3.0 - 0.5, v = (y + 0.5) / 3.0 - 0.5;
      EXPECT_NEAR(hr.at(0, y, x), 0.1 * u + 0.05 * v, 1e-12);
    }
}

TEST(Bicubic, SmoothCubeSurvivesUpThenDown) {
  SpectralCube c(14, 24, 36);
  for (int ch = 0; ch < 14; ++ch)
    for (int y = 0; y < 24; ++y)
      for (int x = 0; x < 36; ++x) c.at(ch, y, x) = 0.5 + 0.3 * std::sin(0.2 * x + 0.1 * ch) * std::cos(0.15 * y);
  const SpectralCube back = downsample_cube(bicubic_upsample_cube(c, 3), 3);
  double worst = 0;
  for (std::size_t i = 0; i < c.data.size(); ++i) worst = std::max(worst, std::abs(back.data[i] - c.data[i]));
  EXPECT_LT(worst, 0.05);
}

TEST(TensorBridge, StackAndExtract) {
  MosaicImage a(4, 8, 0.1), b(4, 8, 0.2);
  const Tensor t = mosaics_to_tensor({a, b});
  EXPECT_EQ(t.shape(), (Shape{2, 1, 4, 8}));
  EXPECT_EQ(tensor_to_mosaic(t, 1), b);
  EXPECT_THROW(mosaics_to_tensor({a, MosaicImage(4, 4)}), DimensionError);
  EXPECT_THROW(tensor_to_mosaic(t, 2), DimensionError);
}
