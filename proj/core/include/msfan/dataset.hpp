#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "msfan/mosaic.hpp"

namespace msfan {

enum class Split { kTrain, kVal, kTest };

const char* split_name(Split s);
Split parse_split(const std::string& name);

struct SampleEntry {
  int id = 0;
  Split split = Split::kTrain;
  std::string hr_path;  // relative to the dataset directory
  std::string lr_path;
};

/// Contents of `manifest.json` at the root of a dataset directory.
struct DatasetManifest {
  int height = 0;  // HR cube extents
  int width = 0;
  int scale = 3;
  uint64_t seed = 0;
  /// True when the train/val assignment is the dataset's own division, which
  /// k-fold splitting keeps as fold 0.
  bool original_split = true;
  MosaicLayout layout = MosaicLayout::standard();
  double min_adjacent_correlation = 0.0;
  std::vector<SampleEntry> samples;

  std::vector<int> ids(Split split) const;
  std::string to_json() const;
  static DatasetManifest from_json(const std::string& text);
};

/// Train/val/test sizes in 300/30/20 proportion; val and test round down.
struct SplitCounts {
  int train = 0;
  int val = 0;
  int test = 0;
};
SplitCounts split_counts(int count);

/// One HR/LR pair together with its mosaics.
struct Sample {
  int id = 0;
  SpectralCube hr;
  SpectralCube lr;
  MosaicImage hr_mosaic;
  MosaicImage lr_mosaic;
};

/// A dataset directory loaded fully into memory.
class Dataset {
 public:
  static Dataset load(const std::string& dir);
  /// In-memory dataset from cubes; LR cubes are derived by box decimation.
  static Dataset from_cubes(const std::vector<SpectralCube>& hr, const MosaicLayout& layout,
                            int scale = 3);

  /// Same samples re-mosaicked under another layout.
  Dataset with_layout(const MosaicLayout& layout) const;

  const DatasetManifest& manifest() const { return manifest_; }
  const MosaicLayout& layout() const { return manifest_.layout; }
  const Sample& sample(int id) const;
  std::size_t size() const { return samples_.size(); }
  std::vector<int> ids(Split split) const { return manifest_.ids(split); }

 private:
  DatasetManifest manifest_;
  std::vector<Sample> samples_;  // indexed by id
};

/// Parameters of the synthetic spectral scene generator.
struct SynthOptions {
  int height = 48;
  int width = 96;
  /// Gaussian blur applied to the random fields, in HR pixels.
  double blur_sigma = 2.0;
  int base_fields = 3;
  /// Weight of the per-channel independent texture.
  double channel_detail = 0.15;
};

/// HR cube of low-pass random fields sharing spatial structure across
/// channels with smoothly varying spectral gains, mapped into [0, 1].
SpectralCube synth_cube(const SynthOptions& options, uint64_t seed);

double pearson_correlation(const SpectralCube& cube, int channel_a, int channel_b);
double min_adjacent_correlation(const SpectralCube& cube);

/// Writes `count` HR/LR pairs and a manifest under `dir`:
///   hr/NNNN.msic, lr/NNNN.msic, manifest.json
/// HR dimensions must be multiples of 12.
DatasetManifest synth_dataset(int count, const SynthOptions& options, uint64_t seed,
                              const std::string& dir,
                              const MosaicLayout& layout = MosaicLayout::standard());

/// Per-sample seed derived from the run seed.
uint64_t derive_seed(uint64_t seed, uint64_t stream);

}  // namespace msfan
