#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "opnn/entropy.hpp"
#include "opnn/sigproc.hpp"

namespace opnn::pipeline {

namespace fs = std::filesystem;

struct QualityConfig {
  /// Use this gate checkpoint instead of training one.
  fs::path model_path;
  std::size_t q = 3;
  std::size_t width = 16;
  std::size_t epochs = 20;
  double learning_rate = 0.25;
  std::size_t batch_size = 16;
  /// Folds for the gate's cross-validation report; 0 skips it.
  std::size_t kfold = 5;
};

struct RestorerConfig {
  double lambda_cyc = 0.5;
  double beta_ide = 0.25;
  std::size_t epochs = 150;
  double learning_rate = 0.0005;
  std::size_t batch_size = 16;
  /// 0 disables the restored-PPG branch.
  int passes = 1;
  std::size_t q = 3;
  std::size_t width = 4;
  std::size_t residual_blocks = 12;
};

struct ClassifierConfig {
  std::vector<std::size_t> q = {1, 3, 5, 7};
  std::size_t width = 16;
  std::size_t epochs = 20;
  double learning_rate = 0.25;
  std::size_t batch_size = 16;
};

struct PipelineConfig {
  fs::path manifest;
  fs::path output = "out";
  /// Defaults to <output>/models.
  fs::path checkpoints;
  sig::PreprocessConfig preprocess;
  QualityConfig quality;
  RestorerConfig restorer;
  ClassifierConfig classifier;
  entropy::EntropyParams entropy;
  std::vector<int> test_splits = {1, 2};
  std::uint64_t seed = 0;

  fs::path checkpoint_dir() const { return checkpoints.empty() ? output / "models" : checkpoints; }
};

/// Every key is optional; unknown keys and out-of-range values raise a
/// Config error. Relative paths resolve against `base`.
PipelineConfig parse_config(const std::string& json_text, const fs::path& base = {});
PipelineConfig load_config(const fs::path& path);
std::string dump_config(const PipelineConfig& config);

/// Stages. Each reads its inputs from the output directory and fails with a
/// Data error naming the stage to run when one is missing.
void run_ingest(const PipelineConfig& config);
void run_preprocess(const PipelineConfig& config);
void run_qc_train(const PipelineConfig& config);
void run_qc_apply(const PipelineConfig& config);
void run_restore_train(const PipelineConfig& config);
void run_restore(const PipelineConfig& config);
void run_entropy_report(const PipelineConfig& config);
void run_clf_train(const PipelineConfig& config);
void run_evaluate(const PipelineConfig& config);

/// All stages in order.
void run_pipeline(const PipelineConfig& config);

/// Writes a synthetic manifest with paired ECG (500 Hz) and PPG (125 Hz)
/// recordings, rhythm annotations and quality annotations.
struct SynthDatasetConfig {
  std::size_t subjects = 4;
  double duration_s = 200;
  /// Fraction of PPG windows replaced by artefact.
  double corrupted_fraction = 0.2;
  std::uint64_t seed = 0;
};
void write_synthetic_dataset(const fs::path& dir, const SynthDatasetConfig& config);

}  // namespace opnn::pipeline
