#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "msfan/training.hpp"

namespace msfan::cli {

struct RunPaths {
  std::string dataset;
  std::string checkpoint = "best.msfc";  // best-validation parameters
  std::string last_checkpoint;           // final state incl. optimizer, for resuming
  std::string resume;                    // checkpoint to continue from
  std::string log;                       // training log; empty writes to stdout
};

/// Everything a training, evaluation or k-fold run needs, as one document:
///
///   {"model": {...}, "train": {...}, "loss": {...}, "paths": {...}, "layout": ""}
///
/// Each leaf key is also a command-line flag spelled `--section.key`
/// (`--layout` for the top-level layout file).
struct RunConfig {
  TrainConfig train;
  RunPaths paths;
  std::string layout;  // layout file overriding the dataset's own; empty keeps it

  nlohmann::json to_json() const;
  /// Strict: unknown keys and wrongly typed values raise ConfigError. Missing
  /// keys keep their defaults.
  static RunConfig from_json(const nlohmann::json& doc);
  static RunConfig load(const std::string& path);
};

/// Dotted names of every leaf key, in document order.
std::vector<std::string> config_keys();

/// Sets a dotted key from its command-line spelling, parsed according to the
/// type of the default value. Arrays take comma-separated numbers.
void apply_override(nlohmann::json& doc, const std::string& key, const std::string& value);

}  // namespace msfan::cli
