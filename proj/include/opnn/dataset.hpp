#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "opnn/sigproc.hpp"

namespace opnn::data {

namespace fs = std::filesystem;

struct RecordingEntry {
  /// Resolved against the manifest's directory when relative.
  fs::path file;
  std::string subject_id;
  sig::Modality modality = sig::Modality::PPG;
  double sample_rate_hz = 0;
  double start_time_s = 0;
  /// Test split (1 or 2); 0 lets ingestion assign one.
  int split = 0;
};

struct Annotation {
  std::string subject_id;
  double start_s = 0;
  double end_s = 0;
  sig::Label label = sig::Label::Unlabeled;
};

struct QualityAnnotation {
  std::string subject_id;
  double start_s = 0;
  double end_s = 0;
  sig::Quality quality = sig::Quality::Unassessed;
};

/// JSON manifest:
///
///   {"recordings": [{"file", "subject_id", "modality", "sample_rate_hz",
///                    "start_time_s", "split"?}],
///    "annotations": [{"subject_id", "start_s", "end_s", "label"}],
///    "quality_annotations": [{"subject_id", "start_s", "end_s", "quality"}]}
///
/// Every key except "recordings" is optional.
struct Manifest {
  fs::path path;
  std::vector<RecordingEntry> recordings;
  std::vector<Annotation> annotations;
  std::vector<QualityAnnotation> quality;
};

/// Parses and validates: sample rates in {125, 250, 500}, one recording per
/// (subject, modality), non-overlapping intervals per subject, annotations
/// only for known subjects, every file present.
Manifest load_manifest(const fs::path& path);

/// Raw little-endian float32, or one sample per line for `.csv`. A JSON
/// sidecar `<file>.json` with "sample_rate_hz" / "modality", when present,
/// must agree with `entry`.
std::vector<double> read_signal(const RecordingEntry& entry);

void write_signal_f32(const fs::path& path, const std::vector<double>& samples);

struct Dataset {
  Manifest manifest;
  std::vector<sig::RawRecording> recordings;
  /// Split of each recording, parallel to `recordings`.
  std::vector<int> splits;
};

/// Loads every recording. Subjects without an explicit split alternate
/// between splits 1 and 2 in sorted subject order.
Dataset ingest(const fs::path& manifest_path);

/// AF if at least half of [start, end) is covered by AF annotations, else
/// NonAF by the same rule, else Unlabeled.
sig::Label window_label(const std::vector<Annotation>& annotations, const std::string& subject, double start_s,
                        double end_s);
sig::Quality window_quality(const std::vector<QualityAnnotation>& annotations, const std::string& subject,
                            double start_s, double end_s);

/// Preprocesses every recording, tags label / quality / split, and keeps
/// only windows present in both modalities.
struct SegmentSets {
  std::vector<sig::Segment> ecg;
  std::vector<sig::Segment> ppg;
  std::size_t unpaired_dropped = 0;
};
SegmentSets segment_dataset(const Dataset& dataset, const sig::PreprocessConfig& config);

/// `<dir>/<name>.json` holds the metadata, `<dir>/<name>.f64` the samples as
/// little-endian float64.
void save_segments(const fs::path& dir, const std::string& name, const std::vector<sig::Segment>& segments);
std::vector<sig::Segment> load_segments(const fs::path& dir, const std::string& name);
bool segments_exist(const fs::path& dir, const std::string& name);

}  // namespace opnn::data
