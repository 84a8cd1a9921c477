#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "msfan/dataset.hpp"
#include "msfan/layers.hpp"
#include "msfan/losses.hpp"
#include "msfan/metrics.hpp"
#include "msfan/model.hpp"

namespace msfan {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct TrainConfig {
  int batch_size = 16;
  int crop_lr = 60;  // LR mosaic patch side; HR patch side is crop_lr * scale
  double lr0 = 1e-4;
  int halve_every = 2500;  // epochs
  AdamConfig adam;
  double rotation_p = 0.25;  // probability of each of 90, 180 and 270 degrees
  double hflip_p = 0.5;
  int epochs = 1;
  int64_t max_steps = 0;  // 0 = no limit
  int val_every = 1;      // epochs between validations
  uint64_t seed = 0;
  LossSpec loss;
  ModelConfig model;

  void validate() const;
};

/// lr0 * 0.5^floor(epoch / halve_every).
double lr_at(int epoch, const TrainConfig& config);

/// First and second moment estimates, one buffer per parameter tensor.
struct AdamState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  int64_t t = 0;

  static AdamState for_params(const LayerParams& params);
};

/// Bias-corrected ADAM update of every parameter; a parameter without a
/// gradient buffer is treated as having zero gradient.
void adam_step(LayerParams& params, AdamState& state, double lr, const AdamConfig& config);

// ---------------------------------------------------------------------------
// Patches and augmentation

struct PatchPair {
  MosaicImage lr;
  MosaicImage hr;
};

/// Crop at LR offset (4 * block_y, 4 * block_x); the HR crop is at the same
/// location scaled by `scale`, so both keep the 4x4 mosaic phase.
PatchPair crop_pair_at(const MosaicImage& lr, const MosaicImage& hr, int crop_lr, int block_y,
                       int block_x, int scale = 3);

/// Random phase-preserving crop.
PatchPair crop_pair(const MosaicImage& lr, const MosaicImage& hr, int crop_lr,
                    std::mt19937_64& rng, int scale = 3);

/// Element of the dihedral group of the square: `quarter_turns` counter-
/// clockwise rotations followed by an optional horizontal flip.
struct Transform {
  int quarter_turns = 0;
  bool hflip = false;
};

/// All eight transforms.
std::vector<Transform> all_transforms();

MosaicImage apply_transform(const MosaicImage& image, const Transform& t);

Transform draw_transform(std::mt19937_64& rng, const TrainConfig& config);

/// Applies one random transform jointly to both patches.
PatchPair augment(const PatchPair& pair, std::mt19937_64& rng, const TrainConfig& config);

// ---------------------------------------------------------------------------
// Cross-validation

struct Fold {
  std::vector<int> train;
  std::vector<int> val;
};

/// Random partition of `ids` into k validation folds of equal size. When
/// `first_fold` is given it becomes fold 0 and the rest are shuffled.
std::vector<Fold> kfold_split(const std::vector<int>& ids, int k, uint64_t seed,
                              const std::optional<std::vector<int>>& first_fold = std::nullopt);

// ---------------------------------------------------------------------------
// Evaluation

struct EvalResult {
  std::vector<MetricReport> per_image;
  Aggregate psnr;
  Aggregate ssim;
};

/// Super-resolves one LR mosaic and returns the predicted cube (outputs are
/// clamped to [0, 1] before extraction).
SpectralCube predict_cube(const Model& model, const MosaicImage& lr_mosaic,
                          const MosaicLayout& layout);

EvalResult evaluate(const Model& model, const Dataset& dataset, const std::vector<int>& ids);
EvalResult evaluate_bicubic(const Dataset& dataset, const std::vector<int>& ids);
/// Reports for arbitrary prediction/target pairs (e.g. ground truth vs itself).
EvalResult evaluate_predictions(const std::vector<SpectralCube>& predictions,
                                const std::vector<SpectralCube>& targets,
                                const std::vector<int>& ids);

// ---------------------------------------------------------------------------
// Training

/// Position of the training loop, persisted in checkpoints.
struct TrainCursor {
  int epoch = 0;
  int step_in_epoch = 0;
  int64_t global_step = 0;
  bool operator==(const TrainCursor&) const = default;
};

struct Checkpoint {
  ModelConfig config;
  LayerParams params;
  std::optional<AdamState> adam;
  TrainCursor cursor;
  double best_val_psnr = -1.0;
};

void save_checkpoint(const Checkpoint& checkpoint, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

struct EpochRecord {
  int epoch = 0;
  int64_t step = 0;
  double lr = 0.0;
  double loss = 0.0;
  std::optional<double> val_psnr;
  std::optional<double> val_ssim;

  std::string to_json_line() const;
};

class Trainer {
 public:
  /// Parameters are initialized from config.seed.
  Trainer(TrainConfig config, const Dataset& dataset, std::vector<int> train_ids,
          std::vector<int> val_ids);

  const TrainConfig& config() const { return config_; }
  const Model& model() const { return model_; }
  Model& model() { return model_; }
  const TrainCursor& cursor() const { return cursor_; }
  int steps_per_epoch() const;

  /// Builds the batch for (epoch, step) of the cursor. Pure function of the
  /// seed, the cursor and the training ids.
  std::pair<Tensor, Tensor> batch_at(const TrainCursor& cursor) const;

  /// One optimizer step on the next batch; returns the loss before the update.
  double step();

  /// Runs until config.epochs are complete or max_steps is reached, writing
  /// the header and one record per epoch to `log` when given.
  std::vector<EpochRecord> run(std::ostream* log = nullptr);

  /// Best-validation parameters seen so far (the latest ones when there is
  /// no validation split).
  const LayerParams& best_params() const { return best_params_; }
  double best_val_psnr() const { return best_val_psnr_; }

  Checkpoint checkpoint() const;
  Checkpoint best_checkpoint() const;
  void restore(const Checkpoint& checkpoint);

  /// JSON header line naming the run and its configuration.
  std::string header_json() const;

 private:
  bool finished() const;

  TrainConfig config_;
  const Dataset* dataset_;
  std::vector<int> train_ids_;
  std::vector<int> val_ids_;
  Model model_;
  AdamState adam_;
  TrainCursor cursor_;
  LayerParams best_params_;
  double best_val_psnr_ = -1.0;
  double epoch_loss_sum_ = 0.0;
  int epoch_loss_count_ = 0;
};

/// JSON helpers shared with the command-line tool.
std::string model_config_to_json(const ModelConfig& config);
ModelConfig model_config_from_json(const std::string& text);

}  // namespace msfan
