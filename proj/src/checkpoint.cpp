#include "opnn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace opnn {

namespace {

class Writer {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u16(std::uint16_t v) {
    for (int i = 0; i < 2; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void raw(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    bytes_.insert(bytes_.end(), p, p + n);
  }
  std::vector<std::uint8_t> take() { return std::move(bytes_); }

 private:
  std::vector<std::uint8_t> bytes_;
};

class Reader {
 public:
  Reader(const std::vector<std::uint8_t>& bytes, std::string origin) : bytes_(bytes), origin_(std::move(origin)) {}

  std::uint8_t u8() {
    need(1);
    return bytes_[pos_++];
  }
  std::uint16_t u16() {
    need(2);
    std::uint16_t v = static_cast<std::uint16_t>(bytes_[pos_] | (bytes_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::size_t position() const { return pos_; }
  std::size_t size() const { return bytes_.size(); }

  [[noreturn]] void fail(const std::string& message) const { throw DataError(origin_, 0, message); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) fail("checkpoint truncated at byte " + std::to_string(pos_));
  }

  const std::vector<std::uint8_t>& bytes_;
  std::string origin_;
  std::size_t pos_ = 0;
};

std::vector<LayerRecord<float>> records_of(Module<float>& module) {
  std::vector<LayerRecord<float>> records;
  module.records(records);
  return records;
}

std::string describe(const LayerRecord<float>& r) {
  std::string s = r.tag == LayerTag::SelfOnn ? "SelfOnn(" : "BatchNorm(";
  for (std::size_t i = 0; i < r.shape.size(); ++i) s += (i ? "x" : "") + std::to_string(r.shape[i]);
  return s + ", q=" + std::to_string(r.q) + ")";
}

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const std::vector<CheckpointSection>& sections) {
  Writer w;
  w.raw(kCheckpointMagic, sizeof(kCheckpointMagic));
  w.u16(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(sections.size()));
  std::vector<std::vector<LayerRecord<float>>> all;
  for (const auto& section : sections) {
    require(section.name.size() < 65536, ErrorKind::Argument, "checkpoint section name too long");
    w.u16(static_cast<std::uint16_t>(section.name.size()));
    w.raw(section.name.data(), section.name.size());
    all.push_back(records_of(*section.module));
    w.u32(static_cast<std::uint32_t>(all.back().size()));
    for (const auto& r : all.back()) {
      w.u8(static_cast<std::uint8_t>(r.tag));
      w.u32(r.q);
      w.u8(static_cast<std::uint8_t>(r.shape.size()));
      for (auto d : r.shape) w.u32(d);
    }
  }
  for (const auto& records : all) {
    for (const auto& r : records) {
      for (const auto* block : r.blocks) {
        for (float v : block->value) w.f32(v);
      }
    }
  }
  return w.take();
}

void decode_checkpoint(const std::vector<std::uint8_t>& bytes, const std::vector<CheckpointSection>& sections,
                       const std::string& origin) {
  Reader in(bytes, origin);
  if (in.str(sizeof(kCheckpointMagic)) != std::string(kCheckpointMagic, sizeof(kCheckpointMagic))) {
    in.fail("not a checkpoint (bad magic)");
  }
  const auto version = in.u16();
  if (version != kCheckpointVersion) in.fail("unsupported checkpoint version " + std::to_string(version));
  const auto section_count = in.u32();
  if (section_count != sections.size()) {
    in.fail("expected " + std::to_string(sections.size()) + " sections, found " + std::to_string(section_count));
  }

  std::vector<std::vector<LayerRecord<float>>> all;
  std::size_t payload = 0;
  for (const auto& section : sections) {
    const auto name = in.str(in.u16());
    if (name != section.name) in.fail("expected section '" + section.name + "', found '" + name + "'");
    all.push_back(records_of(*section.module));
    const auto& records = all.back();
    const auto layer_count = in.u32();
    if (layer_count != records.size()) {
      in.fail("section '" + name + "': expected " + std::to_string(records.size()) + " layers, found " +
              std::to_string(layer_count));
    }
    for (std::size_t i = 0; i < records.size(); ++i) {
      LayerRecord<float> stored;
      stored.tag = static_cast<LayerTag>(in.u8());
      stored.q = in.u32();
      const auto rank = in.u8();
      for (std::uint8_t d = 0; d < rank; ++d) stored.shape.push_back(in.u32());
      const auto& expected = records[i];
      if (stored.tag != expected.tag || stored.q != expected.q || stored.shape != expected.shape) {
        in.fail("section '" + name + "' layer " + std::to_string(i) + ": expected " + describe(expected) +
                ", found " + describe(stored));
      }
      for (const auto* block : expected.blocks) payload += block->size() * sizeof(float);
    }
  }
  if (bytes.size() != in.position() + payload) {
    in.fail("expected " + std::to_string(in.position() + payload) + " bytes, found " +
            std::to_string(bytes.size()));
  }
  for (auto& records : all) {
    for (auto& r : records) {
      for (auto* block : r.blocks) {
        for (float& v : block->value) v = in.f32();
      }
    }
  }
}

void save_checkpoint(const std::filesystem::path& path, const std::vector<CheckpointSection>& sections) {
  const auto bytes = encode_checkpoint(sections);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(path.string(), 0, "cannot open for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError(path.string(), 0, "write failed");
}

void load_checkpoint(const std::filesystem::path& path, const std::vector<CheckpointSection>& sections) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(path.string(), 0, "cannot open checkpoint");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  decode_checkpoint(bytes, sections, path.string());
}

}  // namespace opnn
