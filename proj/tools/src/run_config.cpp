#include "msfan/cli/run_config.hpp"

#include <fstream>
#include <sstream>

#include "msfan/errors.hpp"

namespace msfan::cli {

using nlohmann::json;

namespace {

template <typename T>
void read(const json& section, const char* key, T& dst, const std::string& where) {
  auto it = section.find(key);
  if (it == section.end()) return;
  try {
    dst = it->get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config key " + where + "." + key + " has the wrong type");
  }
}

void reject_unknown(const json& section, const json& defaults, const std::string& where) {
  if (!section.is_object()) throw ConfigError("config section " + where + " must be an object");
  for (auto it = section.begin(); it != section.end(); ++it) {
    if (!defaults.contains(it.key())) {
      throw ConfigError("unknown config key " + (where.empty() ? "" : where + ".") + it.key());
    }
  }
}

// Integers must not silently accept 2.5 or true.
void require_integer(const json& section, const char* key, const std::string& where) {
  auto it = section.find(key);
  if (it != section.end() && !it->is_number_integer()) {
    throw ConfigError("config key " + where + "." + key + " must be an integer");
  }
}

}  // namespace

json RunConfig::to_json() const {
  const TrainConfig& t = train;
  const ModelConfig& m = t.model;
  json doc;
  doc["model"] = {{"groups", m.groups},          {"blocks", m.blocks},
                  {"channels", m.channels},      {"scale", m.scale},
                  {"use_ca", m.use_ca},          {"ca_reduction", m.ca_reduction},
                  {"use_multifan", m.use_multifan}};
  doc["train"] = {{"batch_size", t.batch_size},   {"crop_lr", t.crop_lr},
                  {"lr0", t.lr0},                 {"halve_every", t.halve_every},
                  {"beta1", t.adam.beta1},        {"beta2", t.adam.beta2},
                  {"adam_eps", t.adam.epsilon},   {"rotation_p", t.rotation_p},
                  {"hflip_p", t.hflip_p},         {"epochs", t.epochs},
                  {"max_steps", t.max_steps},     {"val_every", t.val_every},
                  {"seed", t.seed}};
  doc["loss"] = {{"base", loss_base_name(t.loss.base)},
                 {"log_scale", t.loss.log_scale},
                 {"epsilon", t.loss.epsilon},
                 {"head_weights", t.loss.head_weights}};
  doc["paths"] = {{"dataset", paths.dataset},
                  {"checkpoint", paths.checkpoint},
                  {"last_checkpoint", paths.last_checkpoint},
                  {"resume", paths.resume},
                  {"log", paths.log}};
  doc["layout"] = layout;
  return doc;
}

RunConfig RunConfig::from_json(const json& doc) {
  const json defaults = RunConfig{}.to_json();
  reject_unknown(doc, defaults, "");
  RunConfig rc;
  TrainConfig& t = rc.train;

  if (doc.contains("model")) {
    const json& s = doc["model"];
    reject_unknown(s, defaults["model"], "model");
    for (const char* k : {"groups", "blocks", "channels", "scale", "ca_reduction"}) {
      require_integer(s, k, "model");
    }
    read(s, "groups", t.model.groups, "model");
    read(s, "blocks", t.model.blocks, "model");
    read(s, "channels", t.model.channels, "model");
    read(s, "scale", t.model.scale, "model");
    read(s, "use_ca", t.model.use_ca, "model");
    read(s, "ca_reduction", t.model.ca_reduction, "model");
    read(s, "use_multifan", t.model.use_multifan, "model");
  }
  if (doc.contains("train")) {
    const json& s = doc["train"];
    reject_unknown(s, defaults["train"], "train");
    for (const char* k : {"batch_size", "crop_lr", "halve_every", "epochs", "max_steps", "val_every", "seed"}) {
      require_integer(s, k, "train");
    }
    read(s, "batch_size", t.batch_size, "train");
    read(s, "crop_lr", t.crop_lr, "train");
    read(s, "lr0", t.lr0, "train");
    read(s, "halve_every", t.halve_every, "train");
    read(s, "beta1", t.adam.beta1, "train");
    read(s, "beta2", t.adam.beta2, "train");
    read(s, "adam_eps", t.adam.epsilon, "train");
    read(s, "rotation_p", t.rotation_p, "train");
    read(s, "hflip_p", t.hflip_p, "train");
    read(s, "epochs", t.epochs, "train");
    read(s, "max_steps", t.max_steps, "train");
    read(s, "val_every", t.val_every, "train");
    read(s, "seed", t.seed, "train");
  }
  if (doc.contains("loss")) {
    const json& s = doc["loss"];
    reject_unknown(s, defaults["loss"], "loss");
    std::string base = loss_base_name(t.loss.base);
    read(s, "base", base, "loss");
    t.loss.base = parse_loss_base(base);
    read(s, "log_scale", t.loss.log_scale, "loss");
    read(s, "epsilon", t.loss.epsilon, "loss");
    read(s, "head_weights", t.loss.head_weights, "loss");
  }
  if (doc.contains("paths")) {
    const json& s = doc["paths"];
    reject_unknown(s, defaults["paths"], "paths");
    read(s, "dataset", rc.paths.dataset, "paths");
    read(s, "checkpoint", rc.paths.checkpoint, "paths");
    read(s, "last_checkpoint", rc.paths.last_checkpoint, "paths");
    read(s, "resume", rc.paths.resume, "paths");
    read(s, "log", rc.paths.log, "paths");
  }
  if (doc.contains("layout")) {
    if (!doc["layout"].is_string()) throw ConfigError("config key layout must be a file path string");
    rc.layout = doc["layout"].get<std::string>();
  }
  t.validate();
  return rc;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(IoError::Kind::kOpen, "cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return from_json(json::parse(ss.str()));
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path + " is not valid JSON: " + e.what());
  }
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  const json defaults = RunConfig{}.to_json();
  for (const char* section : {"model", "train", "loss", "paths"}) {
    for (auto it = defaults[section].begin(); it != defaults[section].end(); ++it) {
      keys.push_back(std::string(section) + "." + it.key());
    }
  }
  keys.push_back("layout");
  return keys;
}

void apply_override(json& doc, const std::string& key, const std::string& value) {
  const json defaults = RunConfig{}.to_json();
  json::json_pointer ptr("/" + key.substr(0, key.find('.')) +
                         (key.find('.') == std::string::npos ? "" : "/" + key.substr(key.find('.') + 1)));
  if (!defaults.contains(ptr)) throw ConfigError("unknown config key " + key);
  const json& proto = defaults.at(ptr);
  json parsed;
  try {
    std::size_t used = 0;
    if (proto.is_boolean()) {
      if (value == "true" || value == "1") {
        parsed = true;
      } else if (value == "false" || value == "0") {
        parsed = false;
      } else {
        throw ConfigError("--" + key + " expects true or false, got '" + value + "'");
      }
    } else if (proto.is_number_unsigned()) {
      parsed = std::stoull(value, &used);
    } else if (proto.is_number_integer()) {
      parsed = std::stoll(value, &used);
    } else if (proto.is_number()) {
      parsed = std::stod(value, &used);
    } else if (proto.is_array()) {
      json arr = json::array();
      std::stringstream ss(value);
      std::string item;
      while (std::getline(ss, item, ',')) arr.push_back(std::stod(item));
      parsed = arr;
      used = value.size();
    } else {
      parsed = value;
      used = value.size();
    }
    if (!proto.is_boolean() && used != value.size()) throw std::invalid_argument(value);
  } catch (const std::logic_error&) {
    throw ConfigError("--" + key + " cannot parse '" + value + "'");
  }
  doc[ptr] = parsed;
}

}  // namespace msfan::cli
