// Checkpoint container, little-endian throughout:
//
//   "MSFC"                      magic
//   u16   version (1)
//   u32   meta length, then UTF-8 JSON: {"model": {...}, "cursor": {...},
//         "best_val_psnr": x}
//   u32   tensor count
//   per tensor: u16 name length, name bytes, u32 n, c, h, w, f64 payload
//   u8    1 when ADAM state follows, else 0
//   [u64  ADAM step, then per tensor f64 first moments, f64 second moments]
//   u32   CRC-32 of every preceding byte
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <json.hpp>
#include <zlib.h>

#include "msfan/errors.hpp"
#include "msfan/training.hpp"

namespace msfan {

using nlohmann::json;

namespace {

constexpr char kMagic[4] = {'M', 'S', 'F', 'C'};
constexpr uint16_t kVersion = 1;

class Writer {
 public:
  template <typename T>
  void put(T value) {
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      bytes.push_back(static_cast<unsigned char>((static_cast<uint64_t>(value) >> (8 * i)) & 0xFFu));
    }
  }
  void put_f64(double v) { put<uint64_t>(std::bit_cast<uint64_t>(v)); }
  void put_bytes(const std::string& s) { bytes.insert(bytes.end(), s.begin(), s.end()); }
  std::vector<unsigned char> bytes;
};

class Reader {
 public:
  Reader(const std::vector<unsigned char>& b, std::string path) : bytes_(b), path_(std::move(path)) {}
  template <typename T>
  T get() {
    need(sizeof(T));
    uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<uint64_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += sizeof(T);
    return static_cast<T>(v);
  }
  double get_f64() { return std::bit_cast<double>(get<uint64_t>()); }
  std::string get_string(std::size_t n) {
    need(n);
    std::string s(bytes_.begin() + static_cast<std::ptrdiff_t>(pos_),
                  bytes_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
    pos_ += n;
    return s;
  }
  std::size_t pos() const { return pos_; }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw IoError(IoError::Kind::kTruncated, path_ + ": checkpoint truncated");
  }
  const std::vector<unsigned char>& bytes_;
  std::string path_;
  std::size_t pos_ = 0;
};

uint32_t checksum(const unsigned char* data, std::size_t n) {
  return static_cast<uint32_t>(crc32(0L, data, static_cast<uInt>(n)));
}

json model_to_json_object(const ModelConfig& c) {
  return {{"groups", c.groups},         {"blocks", c.blocks}, {"channels", c.channels},
          {"scale", c.scale},           {"use_ca", c.use_ca}, {"ca_reduction", c.ca_reduction},
          {"use_multifan", c.use_multifan}};
}

ModelConfig model_from_json_object(const json& j) {
  if (!j.is_object()) throw ConfigError("model config must be a JSON object");
  ModelConfig c;
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "groups") c.groups = value.get<int>();
      else if (key == "blocks") c.blocks = value.get<int>();
      else if (key == "channels") c.channels = value.get<int>();
      else if (key == "scale") c.scale = value.get<int>();
      else if (key == "use_ca") c.use_ca = value.get<bool>();
      else if (key == "ca_reduction") c.ca_reduction = value.get<int>();
      else if (key == "use_multifan") c.use_multifan = value.get<bool>();
      else throw ConfigError("unknown model config key '" + key + "'");
    } catch (const json::exception& e) {
      throw ConfigError("model config key '" + key + "': " + e.what());
    }
  }
  return c;
}

}  // namespace

std::string model_config_to_json(const ModelConfig& config) {
  return model_to_json_object(config).dump();
}

ModelConfig model_config_from_json(const std::string& text) {
  try {
    return model_from_json_object(json::parse(text));
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("model config is not valid JSON: ") + e.what());
  }
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  Writer w;
  w.put_bytes(std::string(kMagic, 4));
  w.put<uint16_t>(kVersion);
  const json meta = {{"model", model_to_json_object(ckpt.config)},
                     {"cursor",
                      {{"epoch", ckpt.cursor.epoch},
                       {"step_in_epoch", ckpt.cursor.step_in_epoch},
                       {"global_step", ckpt.cursor.global_step}}},
                     {"best_val_psnr", ckpt.best_val_psnr}};
  const std::string meta_text = meta.dump();
  w.put<uint32_t>(static_cast<uint32_t>(meta_text.size()));
  w.put_bytes(meta_text);

  const auto& entries = ckpt.params.entries();
  w.put<uint32_t>(static_cast<uint32_t>(entries.size()));
  for (const auto& [name, t] : entries) {
    w.put<uint16_t>(static_cast<uint16_t>(name.size()));
    w.put_bytes(name);
    const Shape s = t.shape();
    w.put<uint32_t>(static_cast<uint32_t>(s.n));
    w.put<uint32_t>(static_cast<uint32_t>(s.c));
    w.put<uint32_t>(static_cast<uint32_t>(s.h));
    w.put<uint32_t>(static_cast<uint32_t>(s.w));
    for (double v : t.data()) w.put_f64(v);
  }
  w.put<uint8_t>(ckpt.adam ? 1 : 0);
  if (ckpt.adam) {
    const AdamState& a = *ckpt.adam;
    if (a.m.size() != entries.size() || a.v.size() != entries.size()) {
      throw DimensionError("ADAM state does not match the parameter set");
    }
    w.put<uint64_t>(static_cast<uint64_t>(a.t));
    for (std::size_t i = 0; i < entries.size(); ++i) {
      for (double v : a.m[i]) w.put_f64(v);
      for (double v : a.v[i]) w.put_f64(v);
    }
  }
  w.put<uint32_t>(checksum(w.bytes.data(), w.bytes.size()));

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(IoError::Kind::kOpen, "cannot write checkpoint " + path);
  out.write(reinterpret_cast<const char*>(w.bytes.data()), static_cast<std::streamsize>(w.bytes.size()));
  if (!out) throw IoError(IoError::Kind::kOpen, "write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(IoError::Kind::kOpen, "cannot open checkpoint " + path);
  const std::vector<unsigned char> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw IoError(IoError::Kind::kBadMagic, path + ": not a checkpoint file");
  }
  if (bytes.size() < 10) throw IoError(IoError::Kind::kTruncated, path + ": checkpoint truncated");

  Reader r(bytes, path);
  r.get_string(4);
  const auto version = r.get<uint16_t>();
  if (version != kVersion) {
    throw IoError(IoError::Kind::kBadVersion, path + ": unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint ckpt;
  const auto meta_len = r.get<uint32_t>();
  try {
    const json meta = json::parse(r.get_string(meta_len));
    ckpt.config = model_from_json_object(meta.at("model"));
    const json& cur = meta.at("cursor");
    ckpt.cursor.epoch = cur.at("epoch").get<int>();
    ckpt.cursor.step_in_epoch = cur.at("step_in_epoch").get<int>();
    ckpt.cursor.global_step = cur.at("global_step").get<int64_t>();
    ckpt.best_val_psnr = meta.value("best_val_psnr", -1.0);
  } catch (const json::exception& e) {
    throw IoError(IoError::Kind::kFormat, path + ": malformed checkpoint metadata: " + e.what());
  }

  const auto count = r.get<uint32_t>();
  for (uint32_t i = 0; i < count; ++i) {
    const auto name_len = r.get<uint16_t>();
    std::string name = r.get_string(name_len);
    Shape s;
    s.n = r.get<uint32_t>();
    s.c = r.get<uint32_t>();
    s.h = r.get<uint32_t>();
    s.w = r.get<uint32_t>();
    std::vector<double> data(static_cast<std::size_t>(s.numel()));
    for (double& v : data) v = r.get_f64();
    ckpt.params.add(name, Tensor::from_data(s, std::move(data), true));
  }
  if (r.get<uint8_t>() == 1) {
    AdamState a;
    a.t = static_cast<int64_t>(r.get<uint64_t>());
    for (const auto& [name, t] : ckpt.params.entries()) {
      std::vector<double> m(static_cast<std::size_t>(t.numel())), v(static_cast<std::size_t>(t.numel()));
      for (double& x : m) x = r.get_f64();
      for (double& x : v) x = r.get_f64();
      a.m.push_back(std::move(m));
      a.v.push_back(std::move(v));
    }
    ckpt.adam = std::move(a);
  }
  const std::size_t body = r.pos();
  const auto stored = r.get<uint32_t>();
  if (r.pos() != bytes.size()) throw IoError(IoError::Kind::kFormat, path + ": trailing bytes in checkpoint");
  if (stored != checksum(bytes.data(), body)) {
    throw IoError(IoError::Kind::kChecksum, path + ": checkpoint checksum mismatch");
  }
  return ckpt;
}

}  // namespace msfan
