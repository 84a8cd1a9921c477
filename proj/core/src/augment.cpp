#include <algorithm>
#include <set>

#include "msfan/errors.hpp"
#include "msfan/training.hpp"

namespace msfan {

PatchPair crop_pair_at(const MosaicImage& lr, const MosaicImage& hr, int crop_lr, int block_y,
                       int block_x, int scale) {
  if (crop_lr % kPatternSize != 0) throw ContractError("crop size must be a multiple of 4");
  if (hr.height != lr.height * scale || hr.width != lr.width * scale) {
    throw DimensionError("HR mosaic is not " + std::to_string(scale) + "x the LR mosaic");
  }
  const int oy = block_y * kPatternSize;
  const int ox = block_x * kPatternSize;
  if (oy < 0 || ox < 0 || oy + crop_lr > lr.height || ox + crop_lr > lr.width) {
    throw ContractError("crop " + std::to_string(crop_lr) + " at (" + std::to_string(oy) + ", " +
                        std::to_string(ox) + ") exceeds LR mosaic " + std::to_string(lr.height) +
                        "x" + std::to_string(lr.width));
  }
  const int crop_hr = crop_lr * scale;
  PatchPair out{MosaicImage(crop_lr, crop_lr), MosaicImage(crop_hr, crop_hr)};
  for (int y = 0; y < crop_lr; ++y) {
    for (int x = 0; x < crop_lr; ++x) out.lr.at(y, x) = lr.at(oy + y, ox + x);
  }
  for (int y = 0; y < crop_hr; ++y) {
    for (int x = 0; x < crop_hr; ++x) out.hr.at(y, x) = hr.at(oy * scale + y, ox * scale + x);
  }
  return out;
}

PatchPair crop_pair(const MosaicImage& lr, const MosaicImage& hr, int crop_lr,
                    std::mt19937_64& rng, int scale) {
  if (crop_lr > lr.height || crop_lr > lr.width) {
    throw ContractError("image " + std::to_string(lr.height) + "x" + std::to_string(lr.width) +
                        " is smaller than the crop " + std::to_string(crop_lr));
  }
  const int max_by = (lr.height - crop_lr) / kPatternSize;
  const int max_bx = (lr.width - crop_lr) / kPatternSize;
  std::uniform_int_distribution<int> dy(0, max_by);
  std::uniform_int_distribution<int> dx(0, max_bx);
  const int by = dy(rng);
  const int bx = dx(rng);
  return crop_pair_at(lr, hr, crop_lr, by, bx, scale);
}

std::vector<Transform> all_transforms() {
  std::vector<Transform> out;
  for (int flip = 0; flip < 2; ++flip) {
    for (int q = 0; q < 4; ++q) out.push_back({q, flip == 1});
  }
  return out;
}

MosaicImage apply_transform(const MosaicImage& image, const Transform& t) {
  const int turns = ((t.quarter_turns % 4) + 4) % 4;
  if ((turns % 2 == 1) && image.height != image.width) {
    throw ContractError("quarter-turn rotation requires a square patch");
  }
  MosaicImage cur = image;
  for (int q = 0; q < turns; ++q) {
    MosaicImage next(cur.width, cur.height);
    // counter-clockwise: out(i, j) = in(j, W - 1 - i)
    for (int i = 0; i < next.height; ++i) {
      for (int j = 0; j < next.width; ++j) next.at(i, j) = cur.at(j, cur.width - 1 - i);
    }
    cur = std::move(next);
  }
  if (t.hflip) {
    for (int y = 0; y < cur.height; ++y) {
      std::reverse(cur.data.begin() + static_cast<std::ptrdiff_t>(y) * cur.width,
                   cur.data.begin() + static_cast<std::ptrdiff_t>(y + 1) * cur.width);
    }
  }
  return cur;
}

Transform draw_transform(std::mt19937_64& rng, const TrainConfig& config) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double u = unit(rng);
  const double p0 = 1.0 - 3.0 * config.rotation_p;
  Transform t;
  if (u >= p0 && config.rotation_p > 0.0) {
    t.quarter_turns = std::min(3, 1 + static_cast<int>((u - p0) / config.rotation_p));
  }
  t.hflip = unit(rng) < config.hflip_p;
  return t;
}

PatchPair augment(const PatchPair& pair, std::mt19937_64& rng, const TrainConfig& config) {
  const Transform t = draw_transform(rng, config);
  return {apply_transform(pair.lr, t), apply_transform(pair.hr, t)};
}

std::vector<Fold> kfold_split(const std::vector<int>& ids, int k, uint64_t seed,
                              const std::optional<std::vector<int>>& first_fold) {
  const int n = static_cast<int>(ids.size());
  if (k < 2 || n % k != 0) {
    throw ConfigError("cannot split " + std::to_string(n) + " ids into " + std::to_string(k) +
                      " equal folds");
  }
  if (std::set<int>(ids.begin(), ids.end()).size() != ids.size()) {
    throw ConfigError("kfold ids must be distinct");
  }
  const int fold_size = n / k;
  std::vector<std::vector<int>> folds;
  std::vector<int> pool = ids;
  if (first_fold) {
    if (static_cast<int>(first_fold->size()) != fold_size) {
      throw ConfigError("original validation split has " + std::to_string(first_fold->size()) +
                        " ids; a fold must have " + std::to_string(fold_size));
    }
    const std::set<int> first(first_fold->begin(), first_fold->end());
    for (int id : first) {
      if (std::find(ids.begin(), ids.end(), id) == ids.end()) {
        throw ConfigError("original validation id " + std::to_string(id) + " not in the pool");
      }
    }
    folds.emplace_back(first.begin(), first.end());
    pool.erase(std::remove_if(pool.begin(), pool.end(), [&](int id) { return first.count(id) != 0; }),
               pool.end());
  }
  std::sort(pool.begin(), pool.end());
  std::mt19937_64 rng(seed);
  std::shuffle(pool.begin(), pool.end(), rng);
  for (std::size_t start = 0; start < pool.size(); start += static_cast<std::size_t>(fold_size)) {
    std::vector<int> f(pool.begin() + static_cast<std::ptrdiff_t>(start),
                       pool.begin() + static_cast<std::ptrdiff_t>(start + static_cast<std::size_t>(fold_size)));
    std::sort(f.begin(), f.end());
    folds.push_back(std::move(f));
  }

  std::vector<Fold> out;
  for (const auto& val : folds) {
    Fold fold;
    fold.val = val;
    const std::set<int> held(val.begin(), val.end());
    for (int id : ids) {
      if (held.count(id) == 0) fold.train.push_back(id);
    }
    std::sort(fold.train.begin(), fold.train.end());
    out.push_back(std::move(fold));
  }
  return out;
}

}  // namespace msfan
