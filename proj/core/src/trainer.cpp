#include <algorithm>
#include <cmath>
#include <json.hpp>

#include "msfan/errors.hpp"
#include "msfan/training.hpp"

namespace msfan {

using nlohmann::json;

SpectralCube predict_cube(const Model& model, const MosaicImage& lr_mosaic,
                          const MosaicLayout& layout) {
  const ForwardOutputs out = model.forward(mosaics_to_tensor({lr_mosaic}));
  MosaicImage sr = tensor_to_mosaic(out.prediction(), 0);
  for (double& v : sr.data) v = std::clamp(v, 0.0, 1.0);
  return mosaic_to_cube(sr, layout);
}

EvalResult evaluate_predictions(const std::vector<SpectralCube>& predictions,
                                const std::vector<SpectralCube>& targets,
                                const std::vector<int>& ids) {
  if (predictions.size() != targets.size() || ids.size() != targets.size()) {
    throw DimensionError("evaluate: predictions, targets and ids differ in length");
  }
  EvalResult result;
  std::vector<double> psnrs, ssims;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    MetricReport r = evaluate_cubes(predictions[i], targets[i]);
    r.id = std::to_string(ids[i]);
    psnrs.push_back(r.psnr_db);
    ssims.push_back(r.ssim);
    result.per_image.push_back(std::move(r));
  }
  result.psnr = aggregate(psnrs);
  result.ssim = aggregate(ssims);
  return result;
}

EvalResult evaluate(const Model& model, const Dataset& dataset, const std::vector<int>& ids) {
  if (dataset.manifest().scale != model.config().scale) {
    throw DimensionError("checkpoint scale " + std::to_string(model.config().scale) +
                         " does not match dataset scale " + std::to_string(dataset.manifest().scale));
  }
  std::vector<SpectralCube> preds, targets;
  for (int id : ids) {
    const Sample& s = dataset.sample(id);
    preds.push_back(predict_cube(model, s.lr_mosaic, dataset.layout()));
    targets.push_back(s.hr);
  }
  return evaluate_predictions(preds, targets, ids);
}

EvalResult evaluate_bicubic(const Dataset& dataset, const std::vector<int>& ids) {
  std::vector<SpectralCube> preds, targets;
  for (int id : ids) {
    const Sample& s = dataset.sample(id);
    preds.push_back(bicubic_upsample_cube(s.lr, dataset.manifest().scale));
    targets.push_back(s.hr);
  }
  return evaluate_predictions(preds, targets, ids);
}

std::string EpochRecord::to_json_line() const {
  json j = {{"epoch", epoch}, {"step", step}, {"lr", lr}, {"loss", loss}};
  j["val_psnr"] = val_psnr ? (std::isinf(*val_psnr) ? json("inf") : json(*val_psnr)) : json(nullptr);
  j["val_ssim"] = val_ssim ? json(*val_ssim) : json(nullptr);
  return j.dump();
}

// ---------------------------------------------------------------------------

Trainer::Trainer(TrainConfig config, const Dataset& dataset, std::vector<int> train_ids,
                 std::vector<int> val_ids)
    : config_(std::move(config)),
      dataset_(&dataset),
      train_ids_(std::move(train_ids)),
      val_ids_(std::move(val_ids)),
      model_(build(config_.model, config_.seed)) {
  config_.validate();
  if (train_ids_.empty()) throw ConfigError("training split is empty");
  if (dataset.manifest().scale != config_.model.scale) {
    throw ConfigError("dataset scale " + std::to_string(dataset.manifest().scale) +
                      " differs from model.scale " + std::to_string(config_.model.scale));
  }
  for (int id : train_ids_) {
    const Sample& s = dataset.sample(id);
    if (s.lr_mosaic.height < config_.crop_lr || s.lr_mosaic.width < config_.crop_lr) {
      throw ConfigError("train.crop_lr " + std::to_string(config_.crop_lr) +
                        " exceeds LR mosaic " + std::to_string(s.lr_mosaic.height) + "x" +
                        std::to_string(s.lr_mosaic.width) + " of sample " + std::to_string(id));
    }
  }
  for (int id : val_ids_) dataset.sample(id);
  adam_ = AdamState::for_params(model_.params());
  best_params_ = model_.params().clone();
}

int Trainer::steps_per_epoch() const {
  const int n = static_cast<int>(train_ids_.size());
  return (n + config_.batch_size - 1) / config_.batch_size;
}

std::pair<Tensor, Tensor> Trainer::batch_at(const TrainCursor& cursor) const {
  std::vector<int> order = train_ids_;
  std::sort(order.begin(), order.end());
  const uint64_t epoch_seed = derive_seed(config_.seed, 0x5EED0000ull + static_cast<uint64_t>(cursor.epoch));
  std::mt19937_64 shuffler(epoch_seed);
  std::shuffle(order.begin(), order.end(), shuffler);

  const std::size_t begin = static_cast<std::size_t>(cursor.step_in_epoch) * static_cast<std::size_t>(config_.batch_size);
  const std::size_t end = std::min(order.size(), begin + static_cast<std::size_t>(config_.batch_size));
  if (begin >= end) throw ContractError("batch cursor past the end of the epoch");

  std::vector<MosaicImage> lr, hr;
  for (std::size_t j = begin; j < end; ++j) {
    const Sample& s = dataset_->sample(order[j]);
    std::mt19937_64 rng(derive_seed(epoch_seed, j));
    PatchPair p = crop_pair(s.lr_mosaic, s.hr_mosaic, config_.crop_lr, rng, config_.model.scale);
    p = augment(p, rng, config_);
    lr.push_back(std::move(p.lr));
    hr.push_back(std::move(p.hr));
  }
  return {mosaics_to_tensor(lr), mosaics_to_tensor(hr)};
}

double Trainer::step() {
  auto [x, y] = batch_at(cursor_);
  model_.params().zero_grad();
  double value = 0.0;
  {
    Tape tape;
    TapeScope scope(tape);
    const ForwardOutputs out = model_.forward(x);
    Tensor loss = total_loss(config_.loss, out, y);
    value = loss.item();
    tape.backward(loss);
  }
  adam_step(model_.params(), adam_, lr_at(cursor_.epoch, config_), config_.adam);
  model_.params().zero_grad();

  cursor_.global_step += 1;
  cursor_.step_in_epoch += 1;
  if (cursor_.step_in_epoch >= steps_per_epoch()) {
    cursor_.step_in_epoch = 0;
    cursor_.epoch += 1;
  }
  return value;
}

bool Trainer::finished() const {
  if (cursor_.epoch >= config_.epochs) return true;
  return config_.max_steps > 0 && cursor_.global_step >= config_.max_steps;
}

std::string Trainer::header_json() const {
  const TrainConfig& c = config_;
  json j;
  j["run"] = c.model.variant_name();
  j["model"] = json::parse(model_config_to_json(c.model));
  j["train"] = {{"batch_size", c.batch_size}, {"crop_lr", c.crop_lr},   {"lr0", c.lr0},
                {"halve_every", c.halve_every}, {"beta1", c.adam.beta1}, {"beta2", c.adam.beta2},
                {"adam_eps", c.adam.epsilon},  {"rotation_p", c.rotation_p}, {"hflip_p", c.hflip_p},
                {"epochs", c.epochs},          {"max_steps", c.max_steps}, {"val_every", c.val_every},
                {"seed", c.seed}};
  j["loss"] = {{"base", loss_base_name(c.loss.base)},
               {"log_scale", c.loss.log_scale},
               {"epsilon", c.loss.epsilon},
               {"head_weights", c.loss.head_weights}};
  j["train_images"] = train_ids_.size();
  j["val_images"] = val_ids_.size();
  j["params"] = model_.params().scalar_count();
  return j.dump();
}

std::vector<EpochRecord> Trainer::run(std::ostream* log) {
  if (log) *log << header_json() << "\n";
  std::vector<EpochRecord> records;
  while (!finished()) {
    const int epoch = cursor_.epoch;
    epoch_loss_sum_ += step();
    epoch_loss_count_ += 1;
    const bool epoch_done = cursor_.epoch != epoch;
    if (!epoch_done && !finished()) continue;

    EpochRecord rec;
    rec.epoch = epoch;
    rec.step = cursor_.global_step;
    rec.lr = lr_at(epoch, config_);
    rec.loss = epoch_loss_sum_ / epoch_loss_count_;
    epoch_loss_sum_ = 0.0;
    epoch_loss_count_ = 0;
    const bool validate_now = (epoch + 1) % config_.val_every == 0 || finished();
    if (!val_ids_.empty() && validate_now) {
      const EvalResult ev = evaluate(model_, *dataset_, val_ids_);
      rec.val_psnr = ev.psnr.mean;
      rec.val_ssim = ev.ssim.mean;
      if (ev.psnr.mean > best_val_psnr_) {
        best_val_psnr_ = ev.psnr.mean;
        best_params_ = model_.params().clone();
      }
    } else if (val_ids_.empty()) {
      best_params_ = model_.params().clone();
    }
    if (log) *log << rec.to_json_line() << "\n" << std::flush;
    records.push_back(rec);
  }
  return records;
}

Checkpoint Trainer::checkpoint() const {
  Checkpoint c;
  c.config = config_.model;
  c.params = model_.params().clone();
  c.adam = adam_;
  c.cursor = cursor_;
  c.best_val_psnr = best_val_psnr_;
  return c;
}

Checkpoint Trainer::best_checkpoint() const {
  Checkpoint c;
  c.config = config_.model;
  c.params = best_params_.clone();
  c.cursor = cursor_;
  c.best_val_psnr = best_val_psnr_;
  return c;
}

void Trainer::restore(const Checkpoint& checkpoint) {
  if (!(checkpoint.config == config_.model)) {
    throw ConfigError("checkpoint model config differs from the training config");
  }
  model_ = Model(checkpoint.config, checkpoint.params.clone());
  adam_ = checkpoint.adam ? *checkpoint.adam : AdamState::for_params(model_.params());
  cursor_ = checkpoint.cursor;
  best_val_psnr_ = checkpoint.best_val_psnr;
  best_params_ = model_.params().clone();
}

}  // namespace msfan
