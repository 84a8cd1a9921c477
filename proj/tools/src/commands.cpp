#include "msfan/cli/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <memory>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "msfan/cli/run_config.hpp"
#include "msfan/cube_io.hpp"
#include "msfan/errors.hpp"
#include "msfan/training.hpp"

namespace msfan::cli {

using nlohmann::json;

namespace {

json number(double v) {
  if (std::isinf(v)) return v > 0 ? json("inf") : json("-inf");
  if (std::isnan(v)) return json("nan");
  return json(v);
}

std::pair<int, int> parse_dims(const std::string& text, const char* flag) {
  const auto x = text.find('x');
  try {
    if (x == std::string::npos) throw std::invalid_argument(text);
    std::size_t a = 0, b = 0;
    const int h = std::stoi(text.substr(0, x), &a);
    const int w = std::stoi(text.substr(x + 1), &b);
    if (a != x || b != text.size() - x - 1 || h <= 0 || w <= 0) throw std::invalid_argument(text);
    return {h, w};
  } catch (const std::logic_error&) {
    throw ConfigError(std::string(flag) + " expects HxW, got '" + text + "'");
  }
}

SampleType parse_dtype(const std::string& name) {
  if (name == "f64") return SampleType::kFloat64;
  if (name == "f32") return SampleType::kFloat32;
  if (name == "u16") return SampleType::kUInt16;
  throw ConfigError("--dtype must be f64, f32 or u16, got '" + name + "'");
}

// Registers one `--section.key` flag per config key plus `--config`.
struct ConfigFlags {
  std::string config_path;
  std::map<std::string, std::string> values;

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "Run configuration document (JSON)");
    const json defaults = RunConfig{}.to_json();
    for (const std::string& key : config_keys()) {
      const auto dot = key.find('.');
      const json& d = dot == std::string::npos ? defaults[key]
                                                 : defaults[key.substr(0, dot)][key.substr(dot + 1)];
      std::string shown = d.is_string() ? d.get<std::string>() : d.dump();
      app->add_option("--" + key, values[key], "Config key " + key + " (default " + shown + ")");
    }
  }

  RunConfig resolve(CLI::App* app) const {
    json doc = RunConfig{}.to_json();
    if (!config_path.empty()) doc = RunConfig::load(config_path).to_json();
    for (const auto& [key, value] : values) {
      if (app->count("--" + key) > 0) apply_override(doc, key, value);
    }
    return RunConfig::from_json(doc);
  }
};

Dataset open_dataset(const std::string& dir, const std::string& layout_path) {
  if (dir.empty()) throw ConfigError("no dataset given (paths.dataset)");
  Dataset ds = Dataset::load(dir);
  if (!layout_path.empty()) ds = ds.with_layout(MosaicLayout::load(layout_path));
  return ds;
}

MosaicLayout layout_or_standard(const std::string& path) {
  return path.empty() ? MosaicLayout::standard() : MosaicLayout::load(path);
}

json aggregate_json(const EvalResult& r) {
  return {{"images", r.per_image.size()},
          {"psnr_mean", number(r.psnr.mean)},
          {"psnr_std", number(r.psnr.stddev)},
          {"ssim_mean", number(r.ssim.mean)},
          {"ssim_std", number(r.ssim.stddev)}};
}

// ---------------------------------------------------------------------------

int cmd_synth(std::ostream& out, int count, const std::string& dims, uint64_t seed,
              const std::string& dir, double blur_sigma, const std::string& layout) {
  if (count < 1) throw ConfigError("--count must be positive");
  const auto [h, w] = parse_dims(dims, "--dims");
  SynthOptions opt;
  opt.height = h;
  opt.width = w;
  opt.blur_sigma = blur_sigma;
  const DatasetManifest m = synth_dataset(count, opt, seed, dir, layout_or_standard(layout));
  json j = {{"dataset", dir},
            {"count", count},
            {"dims", {h, w}},
            {"seed", seed},
            {"train", m.ids(Split::kTrain).size()},
            {"val", m.ids(Split::kVal).size()},
            {"test", m.ids(Split::kTest).size()},
            {"min_adjacent_correlation", m.min_adjacent_correlation}};
  out << j.dump() << "\n";
  return 0;
}

int cmd_convert(std::ostream& out, const std::string& in, const std::string& dst,
                const std::string& layout_path, const std::string& dtype) {
  const MosaicLayout layout = layout_or_standard(layout_path);
  const SampleType type = parse_dtype(dtype);
  const CubeHeader header = read_cube_header(in);
  json j = {{"in", in}, {"out", dst}};
  if (header.channels == kSpectralChannels) {
    const MosaicImage m = cube_to_mosaic(load_cube(in), layout);
    save_mosaic(m, dst, type);
    j["direction"] = "cube_to_mosaic";
    j["shape"] = {1, m.height, m.width};
  } else if (header.channels == 1) {
    const SpectralCube c = mosaic_to_cube(load_mosaic(in), layout);
    save_cube(c, dst, type);
    j["direction"] = "mosaic_to_cube";
    j["shape"] = {c.channels, c.height, c.width};
  } else {
    throw IoError(IoError::Kind::kFormat, in + ": expected 14 channels (cube) or 1 (mosaic), found " +
                                              std::to_string(header.channels));
  }
  out << j.dump() << "\n";
  return 0;
}

int cmd_train(std::ostream& out, const RunConfig& rc) {
  const Dataset ds = open_dataset(rc.paths.dataset, rc.layout);
  Trainer trainer(rc.train, ds, ds.ids(Split::kTrain), ds.ids(Split::kVal));
  if (!rc.paths.resume.empty()) trainer.restore(load_checkpoint(rc.paths.resume));

  std::ofstream file;
  std::ostream* log = &out;
  if (!rc.paths.log.empty()) {
    file.open(rc.paths.log);
    if (!file) throw IoError(IoError::Kind::kOpen, "cannot write log " + rc.paths.log);
    log = &file;
  }
  trainer.run(log);
  if (!rc.paths.checkpoint.empty()) save_checkpoint(trainer.best_checkpoint(), rc.paths.checkpoint);
  if (!rc.paths.last_checkpoint.empty()) save_checkpoint(trainer.checkpoint(), rc.paths.last_checkpoint);
  if (!rc.paths.log.empty()) {
    out << json{{"run", rc.train.model.variant_name()},
                {"steps", trainer.cursor().global_step},
                {"best_val_psnr", number(trainer.best_val_psnr())},
                {"checkpoint", rc.paths.checkpoint}}
               .dump()
        << "\n";
  }
  return 0;
}

int cmd_eval(std::ostream& out, const std::string& checkpoint, const std::string& dataset,
             const std::string& split, const std::string& predictor, const std::string& layout) {
  const Dataset ds = open_dataset(dataset, layout);
  const std::vector<int> ids = split == "all" ? [&] {
    std::vector<int> all;
    for (const auto& e : ds.manifest().samples) all.push_back(e.id);
    return all;
  }()
                                              : ds.ids(parse_split(split));
  if (ids.empty()) throw ConfigError("split '" + split + "' has no images");
  EvalResult r;
  if (predictor == "model") {
    if (checkpoint.empty()) throw ConfigError("--checkpoint is required for the model predictor");
    const Checkpoint c = load_checkpoint(checkpoint);
    r = evaluate(Model(c.config, c.params), ds, ids);
  } else if (predictor == "bicubic") {
    r = evaluate_bicubic(ds, ids);
  } else if (predictor == "truth") {
    std::vector<SpectralCube> cubes;
    for (int id : ids) cubes.push_back(ds.sample(id).hr);
    r = evaluate_predictions(cubes, cubes, ids);
  } else {
    throw ConfigError("--predictor must be model, bicubic or truth");
  }
  for (const MetricReport& m : r.per_image) out << m.to_json_line() << "\n";
  json agg = aggregate_json(r);
  agg["summary"] = "eval";
  agg["predictor"] = predictor;
  agg["split"] = split;
  out << agg.dump() << "\n";
  return 0;
}

int cmd_kfold(std::ostream& out, const RunConfig& rc, int k, std::optional<uint64_t> seed) {
  const Dataset ds = open_dataset(rc.paths.dataset, rc.layout);
  std::vector<int> pool = ds.ids(Split::kTrain);
  const std::vector<int> val = ds.ids(Split::kVal);
  pool.insert(pool.end(), val.begin(), val.end());
  std::sort(pool.begin(), pool.end());
  std::optional<std::vector<int>> first;
  if (ds.manifest().original_split && !val.empty()) first = val;
  const auto folds = kfold_split(pool, k, seed.value_or(rc.train.seed), first);

  std::vector<double> psnrs, ssims;
  for (std::size_t i = 0; i < folds.size(); ++i) {
    Trainer trainer(rc.train, ds, folds[i].train, folds[i].val);
    trainer.run(nullptr);
    const EvalResult r = evaluate(Model(rc.train.model, trainer.best_params().clone()), ds, folds[i].val);
    psnrs.push_back(r.psnr.mean);
    ssims.push_back(r.ssim.mean);
    out << json{{"fold", i},
                {"train", folds[i].train.size()},
                {"val", folds[i].val.size()},
                {"psnr", number(r.psnr.mean)},
                {"ssim", number(r.ssim.mean)}}
               .dump()
        << "\n"
        << std::flush;
  }
  const Aggregate p = aggregate(psnrs);
  const Aggregate s = aggregate(ssims);
  out << json{{"summary", "kfold"},
              {"run", rc.train.model.variant_name()},
              {"k", k},
              {"psnr_mean", number(p.mean)},
              {"psnr_std", number(p.stddev)},
              {"ssim_mean", number(s.mean)},
              {"ssim_std", number(s.stddev)}}
             .dump()
      << "\n";
  return 0;
}

std::vector<ModelConfig> variant_triple(const ModelConfig& base) {
  ModelConfig rcan = base, rirn = base, mf = base;
  rcan.use_ca = true;
  rcan.use_multifan = false;
  rirn.use_ca = false;
  rirn.use_multifan = false;
  mf.use_ca = false;
  mf.use_multifan = true;
  return {rcan, rirn, mf};
}

int cmd_params(std::ostream& out, const ModelConfig& base) {
  for (const ModelConfig& c : variant_triple(base)) {
    c.validate();
    const int64_t n = param_count(c);
    int64_t registry = 0;
    for (const ParamSpec& s : param_layout(c)) registry += s.shape.numel();
    const int64_t hundredths = (n + 5000) / 10000;
    char millions[32];
    std::snprintf(millions, sizeof millions, "%lld.%02lld", static_cast<long long>(hundredths / 100),
                  static_cast<long long>(hundredths % 100));
    out << json{{"variant", c.variant_name()},
                {"groups", c.groups},
                {"blocks", c.blocks},
                {"channels", c.channels},
                {"params", n},
                {"registry", registry},
                {"millions", std::string(millions) + "M"}}
               .dump()
        << "\n";
  }
  return 0;
}

int cmd_bench(std::ostream& out, const RunConfig& rc, const std::string& shape, int repeats,
              int warmup) {
  if (repeats < 1 || warmup < 0) throw ConfigError("--repeats must be >= 1 and --warmup >= 0");
  const auto [h, w] = parse_dims(shape, "--shape");
  std::mt19937_64 rng(rc.train.seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> data(static_cast<std::size_t>(h) * w);
  for (double& v : data) v = u(rng);
  const Tensor x = Tensor::from_data({1, 1, h, w}, data);

  for (const ModelConfig& c : variant_triple(rc.train.model)) {
    const Model model = build(c, rc.train.seed);
    for (int i = 0; i < warmup; ++i) model.forward(x);
    std::vector<double> times;
    for (int i = 0; i < repeats; ++i) {
      const auto t0 = std::chrono::steady_clock::now();
      model.forward(x);
      times.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
    std::sort(times.begin(), times.end());
    const double median = times.size() % 2 == 1
                              ? times[times.size() / 2]
                              : 0.5 * (times[times.size() / 2 - 1] + times[times.size() / 2]);
    out << json{{"variant", c.variant_name()},
                {"shape", {1, 1, h, w}},
                {"repeats", repeats},
                {"median_s", median},
                {"min_s", times.front()},
                {"flops", count_flops(c, x.shape())},
                {"params", param_count(c)}}
               .dump()
        << "\n"
        << std::flush;
  }
  return 0;
}

void report(std::ostream& err, const std::string& kind, int code, const std::string& message) {
  err << json{{"error", kind}, {"code", code}, {"message", message}}.dump() << "\n";
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-spectral mosaic super-resolution toolkit", "msfan"};
  app.require_subcommand(1);

  auto* synth = app.add_subcommand("synth", "Generate a synthetic HR/LR cube dataset");
  int count = 0;
  std::string dims = "48x96", out_dir, layout;
  uint64_t seed = 0;
  double blur_sigma = SynthOptions{}.blur_sigma;
  synth->add_option("--count", count, "Number of image pairs")->required();
  synth->add_option("--dims", dims, "HR cube height x width, multiples of 12")->capture_default_str();
  synth->add_option("--seed", seed, "Generator seed")->capture_default_str();
  synth->add_option("--out", out_dir, "Output directory")->required();
  synth->add_option("--blur-sigma", blur_sigma, "Spatial correlation length in HR pixels")
      ->capture_default_str();
  synth->add_option("--layout", layout, "Mosaic layout file (JSON)");

  auto* convert = app.add_subcommand("convert", "Convert a cube to its mosaic or a mosaic to its cube");
  std::string in_path, out_path, dtype = "f64";
  convert->add_option("--in", in_path, "Input cube or mosaic file")->required();
  convert->add_option("--out", out_path, "Output file")->required();
  convert->add_option("--layout", layout, "Mosaic layout file (JSON)");
  convert->add_option("--dtype", dtype, "Output sample type: f64, f32 or u16")->capture_default_str();

  auto* train = app.add_subcommand("train", "Train a model on a dataset's train split");
  ConfigFlags train_flags;
  train_flags.attach(train);

  auto* eval = app.add_subcommand("eval", "Evaluate PSNR/SSIM on a dataset split");
  std::string checkpoint, dataset, split = "val", predictor = "model";
  eval->add_option("--checkpoint", checkpoint, "Model checkpoint");
  eval->add_option("--dataset", dataset, "Dataset directory")->required();
  eval->add_option("--split", split, "train, val, test or all")->capture_default_str();
  eval->add_option("--predictor", predictor, "model, bicubic or truth")->capture_default_str();
  eval->add_option("--layout", layout, "Mosaic layout file overriding the dataset's");

  auto* kfold = app.add_subcommand("kfold", "k-fold cross-validation over train+val");
  ConfigFlags kfold_flags;
  kfold_flags.attach(kfold);
  int k = 11;
  std::optional<uint64_t> fold_seed;
  kfold->add_option("--k", k, "Number of folds")->capture_default_str();
  kfold->add_option("--seed", fold_seed, "Fold assignment seed (default train.seed)");

  auto* params = app.add_subcommand("params", "Parameter counts of the RCAN/RIRN/RIRN+MF triple");
  ConfigFlags params_flags;
  params_flags.attach(params);

  auto* bench = app.add_subcommand("bench", "Time one forward pass of each variant");
  ConfigFlags bench_flags;
  bench_flags.attach(bench);
  std::string shape = "64x128";
  int repeats = 5, warmup = 1;
  bench->add_option("--shape", shape, "LR mosaic height x width")->capture_default_str();
  bench->add_option("--repeats", repeats, "Timed repetitions")->capture_default_str();
  bench->add_option("--warmup", warmup, "Untimed warmup passes")->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    report(err, "usage", static_cast<int>(ErrorCode::kConfig), e.what());
    return static_cast<int>(ErrorCode::kConfig);
  }

  try {
    if (*synth) return cmd_synth(out, count, dims, seed, out_dir, blur_sigma, layout);
    if (*convert) return cmd_convert(out, in_path, out_path, layout, dtype);
    if (*train) return cmd_train(out, train_flags.resolve(train));
    if (*eval) return cmd_eval(out, checkpoint, dataset, split, predictor, layout);
    if (*kfold) return cmd_kfold(out, kfold_flags.resolve(kfold), k, fold_seed);
    if (*params) return cmd_params(out, params_flags.resolve(params).train.model);
    if (*bench) return cmd_bench(out, bench_flags.resolve(bench), shape, repeats, warmup);
  } catch (const Error& e) {
    report(err, e.kind(), static_cast<int>(e.code()), e.what());
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    report(err, "internal", 1, e.what());
    return 1;
  }
  return 0;
}

}  // namespace msfan::cli
