#include "msfan/dataset.hpp"

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "msfan/cube_io.hpp"
#include "msfan/errors.hpp"

namespace msfan {

using nlohmann::json;

const char* split_name(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "train";
}

Split parse_split(const std::string& name) {
  if (name == "train") return Split::kTrain;
  if (name == "val") return Split::kVal;
  if (name == "test") return Split::kTest;
  throw ConfigError("unknown split '" + name + "' (expected train, val or test)");
}

SplitCounts split_counts(int count) {
  SplitCounts c;
  c.val = count * 30 / 350;
  c.test = count * 20 / 350;
  c.train = count - c.val - c.test;
  return c;
}

std::vector<int> DatasetManifest::ids(Split split) const {
  std::vector<int> out;
  for (const SampleEntry& s : samples) {
    if (s.split == split) out.push_back(s.id);
  }
  return out;
}

std::string DatasetManifest::to_json() const {
  json doc;
  doc["format"] = "msfan-dataset";
  doc["version"] = 1;
  doc["height"] = height;
  doc["width"] = width;
  doc["scale"] = scale;
  doc["seed"] = seed;
  doc["original_split"] = original_split;
  doc["layout"] = json::parse(layout.to_json()).at("layout");
  doc["min_adjacent_correlation"] = min_adjacent_correlation;
  json list = json::array();
  for (const SampleEntry& s : samples) {
    list.push_back({{"id", s.id}, {"split", split_name(s.split)}, {"hr", s.hr_path}, {"lr", s.lr_path}});
  }
  doc["samples"] = list;
  return doc.dump(2);
}

DatasetManifest DatasetManifest::from_json(const std::string& text) {
  DatasetManifest m;
  try {
    const json doc = json::parse(text);
    if (doc.value("format", "") != "msfan-dataset") {
      throw IoError(IoError::Kind::kFormat, "manifest is not an msfan dataset manifest");
    }
    m.height = doc.at("height").get<int>();
    m.width = doc.at("width").get<int>();
    m.scale = doc.value("scale", 3);
    m.seed = doc.value("seed", uint64_t{0});
    m.original_split = doc.value("original_split", true);
    m.layout = MosaicLayout::from_json(doc.at("layout").dump());
    m.min_adjacent_correlation = doc.value("min_adjacent_correlation", 0.0);
    for (const json& s : doc.at("samples")) {
      SampleEntry e;
      e.id = s.at("id").get<int>();
      e.split = parse_split(s.at("split").get<std::string>());
      e.hr_path = s.at("hr").get<std::string>();
      e.lr_path = s.at("lr").get<std::string>();
      m.samples.push_back(e);
    }
  } catch (const json::exception& e) {
    throw IoError(IoError::Kind::kFormat, std::string("malformed manifest: ") + e.what());
  }
  for (std::size_t i = 0; i < m.samples.size(); ++i) {
    if (m.samples[i].id != static_cast<int>(i)) {
      throw IoError(IoError::Kind::kFormat, "manifest ids must be 0..n-1 in order");
    }
  }
  return m;
}

// ---------------------------------------------------------------------------

namespace {

Sample make_sample(int id, SpectralCube hr, SpectralCube lr, const MosaicLayout& layout) {
  Sample s;
  s.id = id;
  s.hr_mosaic = cube_to_mosaic(hr, layout);
  s.lr_mosaic = cube_to_mosaic(lr, layout);
  s.hr = std::move(hr);
  s.lr = std::move(lr);
  return s;
}

}  // namespace

Dataset Dataset::load(const std::string& dir) {
  namespace fs = std::filesystem;
  std::ifstream in(fs::path(dir) / "manifest.json");
  if (!in) throw IoError(IoError::Kind::kOpen, "cannot open manifest in " + dir);
  std::stringstream ss;
  ss << in.rdbuf();

  Dataset ds;
  ds.manifest_ = DatasetManifest::from_json(ss.str());
  const auto& m = ds.manifest_;
  for (const SampleEntry& e : m.samples) {
    SpectralCube hr = load_cube((fs::path(dir) / e.hr_path).string());
    SpectralCube lr = load_cube((fs::path(dir) / e.lr_path).string());
    if (hr.channels != kSpectralChannels || lr.channels != kSpectralChannels) {
      throw ConfigError("sample " + std::to_string(e.id) + " does not have 14 channels");
    }
    if (hr.height != lr.height * m.scale || hr.width != lr.width * m.scale) {
      throw ConfigError("sample " + std::to_string(e.id) + ": HR is not " +
                        std::to_string(m.scale) + "x the LR size");
    }
    ds.samples_.push_back(make_sample(e.id, std::move(hr), std::move(lr), m.layout));
  }
  return ds;
}

Dataset Dataset::from_cubes(const std::vector<SpectralCube>& hr, const MosaicLayout& layout,
                            int scale) {
  Dataset ds;
  auto& m = ds.manifest_;
  m.layout = layout;
  m.scale = scale;
  if (!hr.empty()) {
    m.height = hr.front().height;
    m.width = hr.front().width;
  }
  const SplitCounts counts = split_counts(static_cast<int>(hr.size()));
  for (std::size_t i = 0; i < hr.size(); ++i) {
    const int id = static_cast<int>(i);
    SampleEntry e;
    e.id = id;
    e.split = id < counts.train ? Split::kTrain
              : id < counts.train + counts.val ? Split::kVal
                                               : Split::kTest;
    m.samples.push_back(e);
    ds.samples_.push_back(make_sample(id, hr[i], downsample_cube(hr[i], scale), layout));
  }
  return ds;
}

Dataset Dataset::with_layout(const MosaicLayout& layout) const {
  Dataset ds = *this;
  ds.manifest_.layout = layout;
  for (Sample& s : ds.samples_) s = make_sample(s.id, s.hr, s.lr, layout);
  return ds;
}

const Sample& Dataset::sample(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= samples_.size()) {
    throw ContractError("sample id " + std::to_string(id) + " out of range");
  }
  return samples_[static_cast<std::size_t>(id)];
}

}  // namespace msfan
