#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "msfan/cli/commands.hpp"
#include "msfan/cli/run_config.hpp"
#include "msfan/cube_io.hpp"
#include "msfan/errors.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code = 0;
  std::string out;
  std::string err;

  std::vector<json> lines() const {
    std::vector<json> v;
    std::istringstream in(out);
    for (std::string line; std::getline(in, line);) {
      if (!line.empty()) v.push_back(json::parse(line));
    }
    return v;
  }
  json error() const { return json::parse(err); }
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  Result r;
  r.code = msfan::cli::run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("msfan_cli_" + std::to_string(std::random_device{}()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& sub) const { return (dir_ / sub).string(); }

  fs::path dir_;
};

std::string slurp(const std::string& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

const std::vector<std::string> kTinyModel = {"--model.groups", "3",  "--model.blocks", "1",
                                             "--model.channels", "8"};

std::vector<std::string> with(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

TEST(Cli, ParamsTriple) {
  const Result r = run({"params", "--model.groups", "5", "--model.blocks", "3"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto l = r.lines();
  ASSERT_EQ(l.size(), 3u);
  EXPECT_EQ(l[0]["variant"], "RCAN");
  EXPECT_EQ(l[0]["params"], 1376253);
  EXPECT_EQ(l[1]["variant"], "RIRN");
  EXPECT_EQ(l[1]["params"], 1367553);
  EXPECT_EQ(l[2]["variant"], "RIRN+Multi-FAN");
  EXPECT_EQ(l[2]["params"], 1533845);
  EXPECT_EQ(l[2]["millions"], "1.53M");
  for (const auto& j : l) EXPECT_EQ(j["params"], j["registry"]);
}

TEST(Cli, ParamsLargeConfiguration) {
  const auto l = run({"params", "--model.groups", "10", "--model.blocks", "20"}).lines();
  ASSERT_EQ(l.size(), 3u);
  EXPECT_EQ(l[0]["params"], 15331553);
  EXPECT_EQ(l[2]["millions"], "15.57M");
  EXPECT_EQ(l[1]["millions"], "15.22M");
}

TEST_F(CliTest, SynthIsReproducible) {
  const Result a = run({"synth", "--count", "5", "--dims", "24x36", "--seed", "4", "--out", path("a")});
  const Result b = run({"synth", "--count", "5", "--dims", "24x36", "--seed", "4", "--out", path("b")});
  ASSERT_EQ(a.code, 0) << a.err;
  ASSERT_EQ(b.code, 0) << b.err;
  const json ja = a.lines().at(0);
  EXPECT_EQ(ja["count"], 5);
  EXPECT_GT(ja["min_adjacent_correlation"].get<double>(), 0.5);
  for (const char* f : {"manifest.json", "hr/0000.msic", "hr/0004.msic", "lr/0002.msic"}) {
    EXPECT_EQ(slurp(path(std::string("a/") + f)), slurp(path(std::string("b/") + f))) << f;
  }
}

TEST_F(CliTest, SynthRejectsBadDims) {
  const Result r = run({"synth", "--count", "2", "--dims", "25x36", "--out", path("x")});
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(r.error()["error"], "config");
  EXPECT_EQ(run({"synth", "--count", "2", "--dims", "banana", "--out", path("x")}).code, 2);
}

TEST_F(CliTest, ConvertFullSizeCubeToMosaicAndBack) {
  msfan::SpectralCube cube(14, 240, 480);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (double& v : cube.data) v = u(rng);
  msfan::save_cube(cube, path("cube.msic"));

  const Result fwd = run({"convert", "--in", path("cube.msic"), "--out", path("mosaic.msic")});
  ASSERT_EQ(fwd.code, 0) << fwd.err;
  EXPECT_EQ(fwd.lines().at(0)["shape"], json({1, 960, 1920}));
  const msfan::CubeHeader h = msfan::read_cube_header(path("mosaic.msic"));
  EXPECT_EQ(h.channels, 1);
  EXPECT_EQ(h.height, 960);
  EXPECT_EQ(h.width, 1920);

  const Result back = run({"convert", "--in", path("mosaic.msic"), "--out", path("back.msic")});
  ASSERT_EQ(back.code, 0) << back.err;
  EXPECT_EQ(back.lines().at(0)["direction"], "mosaic_to_cube");
  EXPECT_EQ(msfan::load_cube(path("back.msic")), cube);
}

TEST_F(CliTest, ConvertRejectsBadLayoutAndInput) {
  msfan::save_cube(msfan::SpectralCube(14, 4, 4, 0.5), path("c.msic"));
  std::ofstream(path("three_dead.json"))
      << "{\"layout\": [[0,1,2,3],[4,5,6,7],[8,9,10,11],[12,null,null,null]]}";
  Result r = run({"convert", "--in", path("c.msic"), "--out", path("m.msic"), "--layout", path("three_dead.json")});
  EXPECT_EQ(r.code, 2);
  EXPECT_FALSE(fs::exists(path("m.msic")));

  std::ofstream(path("junk.msic")) << "not a cube";
  r = run({"convert", "--in", path("junk.msic"), "--out", path("m.msic")});
  EXPECT_EQ(r.code, 3);
  EXPECT_EQ(r.error()["error"], "bad_magic");

  r = run({"convert", "--in", path("missing.msic"), "--out", path("m.msic")});
  EXPECT_EQ(r.code, 3);
  EXPECT_EQ(r.error()["error"], "open");
}

TEST_F(CliTest, TrainLogsHeaderAndRecords) {
  ASSERT_EQ(run({"synth", "--count", "12", "--dims", "24x24", "--out", path("ds")}).code, 0);
  const Result r = run(with({"train", "--paths.dataset", path("ds"), "--model.use_ca", "false",
                             "--model.use_multifan", "false", "--train.batch_size", "2",
                             "--train.crop_lr", "16", "--train.epochs", "2", "--paths.checkpoint",
                             path("best.msfc"), "--paths.last_checkpoint", path("last.msfc")},
                            kTinyModel));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto l = r.lines();
  ASSERT_EQ(l.size(), 3u);
  EXPECT_EQ(l[0]["run"], "RIRN");
  EXPECT_EQ(l[0]["model"]["use_multifan"], false);
  EXPECT_EQ(l[0]["model"]["use_ca"], false);
  EXPECT_EQ(l[1]["epoch"], 0);
  EXPECT_EQ(l[2]["epoch"], 1);
  EXPECT_TRUE(l[2].contains("val_psnr"));
  EXPECT_TRUE(fs::exists(path("best.msfc")));

  const Result e = run({"eval", "--checkpoint", path("best.msfc"), "--dataset", path("ds"), "--split", "val"});
  ASSERT_EQ(e.code, 0) << e.err;
  const auto el = e.lines();
  EXPECT_EQ(el.back()["summary"], "eval");
  EXPECT_EQ(el.back()["images"], 1);
}

TEST_F(CliTest, EvalTruthIsPerfect) {
  ASSERT_EQ(run({"synth", "--count", "3", "--dims", "24x24", "--out", path("ds")}).code, 0);
  const Result r = run({"eval", "--dataset", path("ds"), "--split", "all", "--predictor", "truth"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto l = r.lines();
  ASSERT_EQ(l.size(), 4u);
  EXPECT_EQ(l[0]["psnr_db"], "inf");
  EXPECT_EQ(l[0]["ssim"], 1.0);
  EXPECT_EQ(l.back()["ssim_mean"], 1.0);

  const Result b = run({"eval", "--dataset", path("ds"), "--split", "all", "--predictor", "bicubic"});
  ASSERT_EQ(b.code, 0) << b.err;
  EXPECT_LT(b.lines().back()["ssim_mean"].get<double>(), 1.0);

  EXPECT_EQ(run({"eval", "--dataset", path("ds"), "--split", "bogus", "--predictor", "truth"}).code, 2);
  EXPECT_EQ(run({"eval", "--dataset", path("ds")}).code, 2);
  EXPECT_EQ(run({"eval", "--dataset", path("nowhere")}).code, 3);
}

TEST_F(CliTest, KfoldRowsAndSummary) {
  ASSERT_EQ(run({"synth", "--count", "14", "--dims", "24x24", "--out", path("ds")}).code, 0);
  // 14 images split 13/1/0, so k = 14 gives one image per fold.
  const Result r = run(with({"kfold", "--paths.dataset", path("ds"), "--k", "14", "--train.batch_size", "2",
                             "--train.crop_lr", "8", "--train.max_steps", "1"},
                            kTinyModel));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto l = r.lines();
  ASSERT_EQ(l.size(), 15u);
  for (int i = 0; i < 14; ++i) {
    EXPECT_EQ(l[static_cast<std::size_t>(i)]["fold"], i);
    EXPECT_EQ(l[static_cast<std::size_t>(i)]["val"], 1);
    EXPECT_EQ(l[static_cast<std::size_t>(i)]["train"], 13);
  }
  EXPECT_EQ(l.back()["summary"], "kfold");
  EXPECT_EQ(l.back()["run"], "RIRN+Multi-FAN");
  EXPECT_TRUE(l.back()["psnr_std"].is_number());

  EXPECT_EQ(run(with({"kfold", "--paths.dataset", path("ds"), "--k", "5"}, kTinyModel)).code, 2);
}

TEST_F(CliTest, ConfigFileAndStrictness) {
  std::ofstream(path("good.json")) << R"({"model": {"groups": 4, "blocks": 2, "channels": 16}})";
  Result r = run({"params", "--config", path("good.json"), "--model.blocks", "1"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.lines()[0]["groups"], 4);
  EXPECT_EQ(r.lines()[0]["blocks"], 1);

  std::ofstream(path("bad.json")) << R"({"model": {"groups": 4, "colour": 2}})";
  r = run({"params", "--config", path("bad.json")});
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(r.error()["error"], "config");

  std::ofstream(path("typed.json")) << R"({"train": {"lr0": "fast"}})";
  EXPECT_EQ(run({"params", "--config", path("typed.json")}).code, 2);

  EXPECT_EQ(run({"params", "--model.colour", "2"}).code, 2);
  EXPECT_EQ(run({"params", "--model.groups", "two"}).code, 2);
  EXPECT_EQ(run({"params", "--model.channels", "0"}).code, 2);
  EXPECT_EQ(run({"params", "--config", path("missing.json")}).code, 3);
}

TEST_F(CliTest, ContractViolationExitCode) {
  // A 9-row mosaic cannot be unpacked into 4x4 cells.
  msfan::save_cube(msfan::SpectralCube(1, 9, 8, 0.5), path("odd.msic"));
  const Result r = run({"convert", "--in", path("odd.msic"), "--out", path("o.msic")});
  EXPECT_EQ(r.code, 4);
  EXPECT_EQ(r.error()["error"], "contract");
}

TEST(Cli, UsageErrors) {
  Result r = run({});
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(r.error()["error"], "usage");
  EXPECT_EQ(run({"frobnicate"}).code, 2);
  EXPECT_EQ(run({"synth", "--count", "3"}).code, 2);
}

TEST(Cli, HelpListsEveryConfigKey) {
  const Result r = run({"train", "--help"});
  EXPECT_EQ(r.code, 0);
  for (const std::string& key : msfan::cli::config_keys()) {
    EXPECT_NE(r.out.find("--" + key), std::string::npos) << key;
  }
  EXPECT_NE(run({"--help"}).out.find("kfold"), std::string::npos);
}

TEST(RunConfig, OverridesAndRoundTrip) {
  json doc = msfan::cli::RunConfig{}.to_json();
  msfan::cli::apply_override(doc, "loss.head_weights", "0.5,2,1");
  EXPECT_THROW(msfan::cli::RunConfig::from_json([&] {
    json d = doc;
    msfan::cli::apply_override(d, "loss.head_weights", "0.5,2");
    return d;
  }()), msfan::ConfigError);
  msfan::cli::apply_override(doc, "train.lr0", "3e-3");
  msfan::cli::apply_override(doc, "model.use_ca", "false");
  const auto rc = msfan::cli::RunConfig::from_json(doc);
  EXPECT_EQ(rc.train.lr0, 3e-3);
  EXPECT_FALSE(rc.train.model.use_ca);
  EXPECT_EQ(msfan::cli::RunConfig::from_json(rc.to_json()).to_json(), rc.to_json());
  EXPECT_THROW(msfan::cli::apply_override(doc, "train.epochs", "1.5"), msfan::ConfigError);
  EXPECT_THROW(msfan::cli::apply_override(doc, "nope.key", "1"), msfan::ConfigError);
}
