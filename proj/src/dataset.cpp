#include "opnn/dataset.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <json.hpp>
#include <map>
#include <set>
#include <sstream>

#include "opnn/error.hpp"

namespace opnn::data {

namespace {

using json = nlohmann::json;

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(path.string(), 0, "cannot open file");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw DataError(path.string(), 0, std::string("malformed JSON: ") + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(path.string(), 0, "cannot write file");
  out << text;
}

template <typename T>
T field(const json& obj, const char* key, const fs::path& file, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw DataError(file.string(), 0, fmt::format("{}: missing \"{}\"", where, key));
  }
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw DataError(file.string(), 0, fmt::format("{}: \"{}\" has the wrong type", where, key));
  }
}

template <typename T>
T optional_field(const json& obj, const char* key, T fallback, const fs::path& file, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  return field<T>(obj, key, file, where);
}

template <typename Interval>
void check_intervals(std::vector<Interval> items, const std::set<std::string>& subjects, const fs::path& file,
                     const char* what) {
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto& a = items[i];
    if (!(a.end_s > a.start_s)) {
      throw DataError(file.string(), 0, fmt::format("{}[{}]: end_s must exceed start_s", what, i));
    }
    if (!subjects.count(a.subject_id)) {
      throw DataError(file.string(), 0,
                      fmt::format("{}[{}]: subject '{}' has no recording", what, i, a.subject_id));
    }
  }
  std::stable_sort(items.begin(), items.end(), [](const Interval& a, const Interval& b) {
    return std::tie(a.subject_id, a.start_s) < std::tie(b.subject_id, b.start_s);
  });
  for (std::size_t i = 1; i < items.size(); ++i) {
    if (items[i].subject_id == items[i - 1].subject_id && items[i].start_s < items[i - 1].end_s) {
      throw DataError(file.string(), 0,
                      fmt::format("{}: overlapping intervals for subject '{}' at {} s", what, items[i].subject_id,
                                  items[i].start_s));
    }
  }
}

template <typename Interval, typename Value>
double coverage(const std::vector<Interval>& items, const std::string& subject, double start_s, double end_s,
                Value Interval::*member, Value wanted) {
  double covered = 0.0;
  for (const auto& a : items) {
    if (a.subject_id != subject || a.*member != wanted) continue;
    covered += std::max(0.0, std::min(end_s, a.end_s) - std::max(start_s, a.start_s));
  }
  return covered;
}

}  // namespace

Manifest load_manifest(const fs::path& path) {
  const json doc = read_json(path);
  if (!doc.is_object()) throw DataError(path.string(), 0, "manifest must be a JSON object");
  for (const auto& [key, value] : doc.items()) {
    if (key != "recordings" && key != "annotations" && key != "quality_annotations") {
      throw DataError(path.string(), 0, fmt::format("unknown manifest key \"{}\"", key));
    }
  }
  Manifest m;
  m.path = path;
  const fs::path base = path.parent_path();

  const json recs = doc.value("recordings", json::array());
  std::set<std::pair<std::string, sig::Modality>> seen;
  std::set<std::string> subjects;
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const auto where = fmt::format("recordings[{}]", i);
    const json& r = recs[i];
    RecordingEntry e;
    e.file = field<std::string>(r, "file", path, where);
    if (e.file.is_relative()) e.file = base / e.file;
    e.subject_id = field<std::string>(r, "subject_id", path, where);
    try {
      e.modality = sig::parse_modality(field<std::string>(r, "modality", path, where));
    } catch (const DataError&) {
      throw;
    } catch (const Error& err) {
      throw DataError(path.string(), 0, where + ": " + err.what());
    }
    e.sample_rate_hz = field<double>(r, "sample_rate_hz", path, where);
    if (e.sample_rate_hz != 125.0 && e.sample_rate_hz != 250.0 && e.sample_rate_hz != 500.0) {
      throw DataError(path.string(), 0,
                      fmt::format("{}: unsupported sample rate {} Hz (expected 125, 250 or 500)", where,
                                  e.sample_rate_hz));
    }
    e.start_time_s = optional_field<double>(r, "start_time_s", 0.0, path, where);
    e.split = optional_field<int>(r, "split", 0, path, where);
    if (e.split < 0 || e.split > 2) {
      throw DataError(path.string(), 0, fmt::format("{}: split must be 1 or 2, got {}", where, e.split));
    }
    if (!fs::exists(e.file)) {
      throw DataError(path.string(), 0, fmt::format("{}: file '{}' does not exist", where, e.file.string()));
    }
    if (!seen.insert({e.subject_id, e.modality}).second) {
      throw DataError(path.string(), 0,
                      fmt::format("{}: second {} recording for subject '{}'", where, sig::to_string(e.modality),
                                  e.subject_id));
    }
    subjects.insert(e.subject_id);
    m.recordings.push_back(std::move(e));
  }

  const json anns = doc.value("annotations", json::array());
  for (std::size_t i = 0; i < anns.size(); ++i) {
    const auto where = fmt::format("annotations[{}]", i);
    Annotation a;
    a.subject_id = field<std::string>(anns[i], "subject_id", path, where);
    a.start_s = field<double>(anns[i], "start_s", path, where);
    a.end_s = field<double>(anns[i], "end_s", path, where);
    const auto label = field<std::string>(anns[i], "label", path, where);
    if (label == "AF") a.label = sig::Label::AF;
    else if (label == "NonAF" || label == "Non-AF") a.label = sig::Label::NonAF;
    else throw DataError(path.string(), 0, fmt::format("{}: label must be AF or NonAF, got '{}'", where, label));
    m.annotations.push_back(std::move(a));
  }

  const json quals = doc.value("quality_annotations", json::array());
  for (std::size_t i = 0; i < quals.size(); ++i) {
    const auto where = fmt::format("quality_annotations[{}]", i);
    QualityAnnotation a;
    a.subject_id = field<std::string>(quals[i], "subject_id", path, where);
    a.start_s = field<double>(quals[i], "start_s", path, where);
    a.end_s = field<double>(quals[i], "end_s", path, where);
    const auto q = field<std::string>(quals[i], "quality", path, where);
    if (q == "Acceptable") a.quality = sig::Quality::Acceptable;
    else if (q == "Corrupted") a.quality = sig::Quality::Corrupted;
    else throw DataError(path.string(), 0, fmt::format("{}: quality must be Acceptable or Corrupted, got '{}'", where, q));
    m.quality.push_back(std::move(a));
  }

  check_intervals(m.annotations, subjects, path, "annotations");
  check_intervals(m.quality, subjects, path, "quality_annotations");
  return m;
}

std::vector<double> read_signal(const RecordingEntry& entry) {
  const auto file = entry.file.string();
  const fs::path sidecar = entry.file.string() + ".json";
  if (fs::exists(sidecar)) {
    const json meta = read_json(sidecar);
    if (meta.contains("sample_rate_hz") && meta["sample_rate_hz"].get<double>() != entry.sample_rate_hz) {
      throw DataError(sidecar.string(), 0,
                      fmt::format("sample rate {} disagrees with manifest ({})", meta["sample_rate_hz"].get<double>(),
                                  entry.sample_rate_hz));
    }
    if (meta.contains("modality") &&
        sig::parse_modality(meta["modality"].get<std::string>()) != entry.modality) {
      throw DataError(sidecar.string(), 0, "modality disagrees with manifest");
    }
  }

  std::vector<double> out;
  if (entry.file.extension() == ".csv") {
    std::ifstream in(entry.file);
    if (!in) throw DataError(file, 0, "cannot open file");
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
      ++number;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.find_first_not_of(" \t") == std::string::npos) continue;
      std::istringstream cell(line);
      double v = 0;
      std::string rest;
      if (!(cell >> v) || (cell >> rest)) throw DataError(file, number, fmt::format("not a number: '{}'", line));
      if (!std::isfinite(v)) throw DataError(file, number, "non-finite sample");
      out.push_back(v);
    }
    return out;
  }

  std::ifstream in(entry.file, std::ios::binary);
  if (!in) throw DataError(file, 0, "cannot open file");
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() % 4 != 0) {
    throw DataError(file, 0, fmt::format("size {} bytes is not a whole number of float32 samples", bytes.size()));
  }
  out.resize(bytes.size() / 4);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint32_t bits = 0;
    std::memcpy(&bits, bytes.data() + 4 * i, 4);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
    float v = 0;
    std::memcpy(&v, &bits, 4);
    if (!std::isfinite(v)) throw DataError(file, 0, fmt::format("non-finite sample at index {}", i));
    out[i] = v;
  }
  return out;
}

void write_signal_f32(const fs::path& path, const std::vector<double>& samples) {
  std::string bytes(samples.size() * 4, '\0');
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto v = static_cast<float>(samples[i]);
    std::uint32_t bits = 0;
    std::memcpy(&bits, &v, 4);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
    std::memcpy(bytes.data() + 4 * i, &bits, 4);
  }
  write_text(path, bytes);
}

Dataset ingest(const fs::path& manifest_path) {
  Dataset d;
  d.manifest = load_manifest(manifest_path);

  std::map<std::string, int> split_of;
  for (const auto& e : d.manifest.recordings) {
    if (e.split == 0) continue;
    auto [it, fresh] = split_of.emplace(e.subject_id, e.split);
    if (!fresh && it->second != e.split) {
      throw DataError(manifest_path.string(), 0, fmt::format("subject '{}' is assigned to both splits", e.subject_id));
    }
  }
  std::set<std::string> unassigned;
  for (const auto& e : d.manifest.recordings) {
    if (!split_of.count(e.subject_id)) unassigned.insert(e.subject_id);
  }
  int next = 1;
  for (const auto& s : unassigned) {
    split_of[s] = next;
    next = 3 - next;
  }

  for (const auto& e : d.manifest.recordings) {
    sig::RawRecording r;
    r.samples = read_signal(e);
    r.sample_rate_hz = e.sample_rate_hz;
    r.modality = e.modality;
    r.subject_id = e.subject_id;
    r.start_time_s = e.start_time_s;
    d.recordings.push_back(std::move(r));
    d.splits.push_back(split_of.at(e.subject_id));
  }
  return d;
}

sig::Label window_label(const std::vector<Annotation>& annotations, const std::string& subject, double start_s,
                        double end_s) {
  const double half = 0.5 * (end_s - start_s);
  // Intervals never overlap, so at most one label can exceed half; at an exact
  // 50/50 split AF takes precedence.
  if (coverage(annotations, subject, start_s, end_s, &Annotation::label, sig::Label::AF) >= half) {
    return sig::Label::AF;
  }
  if (coverage(annotations, subject, start_s, end_s, &Annotation::label, sig::Label::NonAF) >= half) {
    return sig::Label::NonAF;
  }
  return sig::Label::Unlabeled;
}

sig::Quality window_quality(const std::vector<QualityAnnotation>& annotations, const std::string& subject,
                            double start_s, double end_s) {
  const double half = 0.5 * (end_s - start_s);
  if (coverage(annotations, subject, start_s, end_s, &QualityAnnotation::quality, sig::Quality::Corrupted) >= half) {
    return sig::Quality::Corrupted;
  }
  if (coverage(annotations, subject, start_s, end_s, &QualityAnnotation::quality, sig::Quality::Acceptable) >=
      half) {
    return sig::Quality::Acceptable;
  }
  return sig::Quality::Unassessed;
}

SegmentSets segment_dataset(const Dataset& dataset, const sig::PreprocessConfig& config) {
  SegmentSets all;
  for (std::size_t i = 0; i < dataset.recordings.size(); ++i) {
    const auto& rec = dataset.recordings[i];
    auto segments = sig::preprocess_recording(rec, config);
    for (auto& s : segments) {
      const double start = rec.start_time_s + config.window_s * static_cast<double>(s.source.window);
      const double end = start + config.window_s;
      s.label = window_label(dataset.manifest.annotations, rec.subject_id, start, end);
      s.quality = window_quality(dataset.manifest.quality, rec.subject_id, start, end);
      s.split = dataset.splits[i];
    }
    auto& dst = rec.modality == sig::Modality::ECG ? all.ecg : all.ppg;
    dst.insert(dst.end(), std::make_move_iterator(segments.begin()), std::make_move_iterator(segments.end()));
  }

  std::set<sig::SegmentKey> ecg_keys;
  std::set<sig::SegmentKey> ppg_keys;
  for (const auto& s : all.ecg) ecg_keys.insert(s.source);
  for (const auto& s : all.ppg) ppg_keys.insert(s.source);
  auto keep_paired = [&](std::vector<sig::Segment>& v, const std::set<sig::SegmentKey>& other) {
    const auto before = v.size();
    std::erase_if(v, [&](const sig::Segment& s) { return !other.count(s.source); });
    all.unpaired_dropped += before - v.size();
  };
  keep_paired(all.ecg, ppg_keys);
  keep_paired(all.ppg, ecg_keys);

  auto by_key = [](const sig::Segment& a, const sig::Segment& b) { return a.source < b.source; };
  std::sort(all.ecg.begin(), all.ecg.end(), by_key);
  std::sort(all.ppg.begin(), all.ppg.end(), by_key);
  // The PPG annotations describe both modalities of a window.
  for (std::size_t i = 0; i < all.ecg.size(); ++i) all.ecg[i].quality = all.ppg[i].quality;
  return all;
}

void save_segments(const fs::path& dir, const std::string& name, const std::vector<sig::Segment>& segments) {
  fs::create_directories(dir);
  json meta;
  meta["count"] = segments.size();
  meta["segments"] = json::array();
  std::string bytes;
  for (const auto& s : segments) {
    meta["segments"].push_back({{"subject_id", s.source.subject_id},
                                {"window", s.source.window},
                                {"modality", sig::to_string(s.modality)},
                                {"label", sig::to_string(s.label)},
                                {"quality", sig::to_string(s.quality)},
                                {"split", s.split},
                                {"length", s.samples.size()}});
    const std::size_t offset = bytes.size();
    bytes.resize(offset + 8 * s.samples.size());
    for (std::size_t i = 0; i < s.samples.size(); ++i) {
      std::uint64_t bits = 0;
      std::memcpy(&bits, &s.samples[i], 8);
      if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
      std::memcpy(bytes.data() + offset + 8 * i, &bits, 8);
    }
  }
  write_text(dir / (name + ".json"), meta.dump(1) + "\n");
  write_text(dir / (name + ".f64"), bytes);
}

bool segments_exist(const fs::path& dir, const std::string& name) {
  return fs::exists(dir / (name + ".json")) && fs::exists(dir / (name + ".f64"));
}

std::vector<sig::Segment> load_segments(const fs::path& dir, const std::string& name) {
  const fs::path meta_path = dir / (name + ".json");
  const fs::path data_path = dir / (name + ".f64");
  const json meta = read_json(meta_path);
  std::ifstream in(data_path, std::ios::binary);
  if (!in) throw DataError(data_path.string(), 0, "cannot open file");
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  std::vector<sig::Segment> out;
  std::size_t offset = 0;
  try {
    for (const auto& m : meta.at("segments")) {
      sig::Segment s;
      s.source.subject_id = m.at("subject_id").get<std::string>();
      s.source.window = m.at("window").get<std::size_t>();
      s.modality = sig::parse_modality(m.at("modality").get<std::string>());
      s.label = sig::parse_label(m.at("label").get<std::string>());
      s.quality = sig::parse_quality(m.at("quality").get<std::string>());
      s.split = m.at("split").get<int>();
      const auto length = m.at("length").get<std::size_t>();
      if (offset + 8 * length > bytes.size()) throw DataError(data_path.string(), 0, "sample file is truncated");
      s.samples.resize(length);
      for (std::size_t i = 0; i < length; ++i) {
        std::uint64_t bits = 0;
        std::memcpy(&bits, bytes.data() + offset + 8 * i, 8);
        if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
        std::memcpy(&s.samples[i], &bits, 8);
      }
      offset += 8 * length;
      out.push_back(std::move(s));
    }
  } catch (const json::exception& e) {
    throw DataError(meta_path.string(), 0, std::string("malformed segment index: ") + e.what());
  }
  if (offset != bytes.size()) throw DataError(data_path.string(), 0, "sample file has trailing bytes");
  return out;
}

}  // namespace opnn::data
