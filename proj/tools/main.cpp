#include <CLI11.hpp>
#include <fmt/format.h>

#include <fstream>
#include <functional>
#include <map>
#include <optional>

#include "opnn/error.hpp"
#include "opnn/pipeline.hpp"

namespace {

namespace pl = opnn::pipeline;

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> split;
  std::optional<std::size_t> q;
  std::optional<int> passes;
  std::string out;
};

pl::PipelineConfig effective(const Overrides& o) {
  auto c = o.config.empty() ? pl::parse_config("{}") : pl::load_config(o.config);
  if (o.seed) c.seed = *o.seed;
  if (o.split) c.test_splits = {*o.split};
  if (o.q) c.classifier.q = {*o.q};
  if (o.passes) c.restorer.passes = *o.passes;
  if (!o.out.empty()) c.output = o.out;
  // Round-trip so that overrides go through the same validation.
  return pl::parse_config(pl::dump_config(c));
}

void write_effective(const pl::PipelineConfig& c) {
  std::filesystem::create_directories(c.output);
  std::ofstream(c.output / "effective_config.json") << pl::dump_config(c);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Self-ONN AF detection pipeline"};
  app.require_subcommand(1);

  Overrides o;
  const std::map<std::string, std::function<void(const pl::PipelineConfig&)>> stages{
      {"ingest", pl::run_ingest},
      {"preprocess", pl::run_preprocess},
      {"qc-train", pl::run_qc_train},
      {"qc-apply", pl::run_qc_apply},
      {"restore-train", pl::run_restore_train},
      {"restore", pl::run_restore},
      {"clf-train", pl::run_clf_train},
      {"evaluate", pl::run_evaluate},
      {"entropy-report", pl::run_entropy_report},
      {"pipeline", pl::run_pipeline},
  };
  const std::map<std::string, std::string> help{
      {"ingest", "Validate the manifest and load recordings"},
      {"preprocess", "Resample, filter, segment and normalise"},
      {"qc-train", "Train the PPG quality gate"},
      {"qc-apply", "Drop corrupted PPG windows and their ECG partners"},
      {"restore-train", "Train the CycleGAN restorer"},
      {"restore", "Restore gated PPG windows (one and two passes)"},
      {"clf-train", "Train AF classifiers per branch, split and q"},
      {"evaluate", "Score classifiers and write reports"},
      {"entropy-report", "Entropy table before and after restoration"},
      {"pipeline", "Run every stage in order"},
  };

  std::string selected;
  for (const auto& [name, fn] : stages) {
    auto* sub = app.add_subcommand(name, help.at(name));
    sub->add_option("--config", o.config, "JSON config file")->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "Random seed");
    sub->add_option("--split", o.split, "Test split")->check(CLI::IsMember({1, 2}));
    sub->add_option("--q", o.q, "Classifier order")->check(CLI::IsMember({1, 3, 5, 7}));
    sub->add_option("--passes", o.passes, "Restoration passes")->check(CLI::IsMember({0, 1, 2}));
    sub->add_option("--out", o.out, "Output directory");
    sub->callback([&selected, name = name] { selected = name; });
  }

  pl::SynthDatasetConfig synth;
  std::string synth_dir;
  auto* gen = app.add_subcommand("synth", "Write a synthetic dataset with a manifest");
  gen->add_option("--out", synth_dir, "Target directory")->required();
  gen->add_option("--seed", synth.seed, "Random seed");
  gen->add_option("--subjects", synth.subjects, "Number of subjects")->check(CLI::PositiveNumber);
  gen->add_option("--duration", synth.duration_s, "Seconds per recording")->check(CLI::PositiveNumber);
  gen->add_option("--corrupted", synth.corrupted_fraction, "Fraction of corrupted PPG windows")
      ->check(CLI::Range(0.0, 1.0));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (gen->parsed()) {
      pl::write_synthetic_dataset(synth_dir, synth);
      fmt::print("{}\n", (std::filesystem::path(synth_dir) / "manifest.json").string());
      return 0;
    }
    const auto config = effective(o);
    write_effective(config);
    stages.at(selected)(config);
  } catch (const opnn::Error& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    if (e.kind() == opnn::ErrorKind::Config) return kExitConfig;
    if (e.kind() == opnn::ErrorKind::Data) return kExitData;
    return 1;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
  return 0;
}
