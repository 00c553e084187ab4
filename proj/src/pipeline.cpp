#include "opnn/pipeline.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <fstream>
#include <json.hpp>
#include <map>
#include <set>

#include "opnn/afnet.hpp"
#include "opnn/checkpoint.hpp"
#include "opnn/dataset.hpp"
#include "opnn/report.hpp"
#include "opnn/restorer.hpp"
#include "opnn/synth.hpp"

namespace opnn::pipeline {

namespace {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Config parsing

class Reader {
 public:
  Reader(const json& obj, std::string where) : obj_(obj), where_(std::move(where)) {
    if (!obj_.is_object()) throw Error(ErrorKind::Config, where_ + ": expected a JSON object");
  }

  template <typename T>
  void get(const char* key, T& target) {
    used_.insert(key);
    if (!obj_.contains(key)) return;
    try {
      target = obj_.at(key).get<T>();
    } catch (const json::exception&) {
      throw Error(ErrorKind::Config, fmt::format("{}.{}: wrong type", where_, key));
    }
  }

  void get_path(const char* key, fs::path& target, const fs::path& base) {
    std::string s;
    get(key, s);
    if (!obj_.contains(key)) return;
    target = s;
    if (!target.empty() && target.is_relative() && !base.empty()) target = base / target;
  }

  void band(const char* key, double& low, double& high) {
    std::vector<double> v{low, high};
    get(key, v);
    if (v.size() != 2) throw Error(ErrorKind::Config, fmt::format("{}.{}: expected [low, high]", where_, key));
    low = v[0];
    high = v[1];
  }

  Reader child(const char* key) {
    used_.insert(key);
    static const json empty = json::object();
    return Reader(obj_.contains(key) ? obj_.at(key) : empty, where_ + "." + key);
  }

  void finish() const {
    for (const auto& [key, value] : obj_.items()) {
      if (!used_.count(key)) throw Error(ErrorKind::Config, fmt::format("{}: unknown key \"{}\"", where_, key));
    }
  }

 private:
  const json& obj_;
  std::string where_;
  std::set<std::string> used_;
};

void check(bool ok, const std::string& message) {
  if (!ok) throw Error(ErrorKind::Config, message);
}

bool valid_q(std::size_t q) { return q == 1 || q == 3 || q == 5 || q == 7; }

void validate(const PipelineConfig& c) {
  check(c.preprocess.window_s > 0, "preprocess.window_s must be positive");
  check(c.preprocess.baseline_poly_order >= 1, "preprocess.poly_order must be >= 1");
  check(c.preprocess.filter_order >= 1, "preprocess.filter_order must be >= 1");
  check(valid_q(c.quality.q), "quality.q must be one of 1, 3, 5, 7");
  check(c.quality.width >= 4, "quality.width must be >= 4");
  check(c.quality.batch_size >= 2, "quality.batch_size must be >= 2");
  check(c.quality.learning_rate > 0, "quality.learning_rate must be positive");
  check(c.quality.kfold != 1, "quality.kfold must be 0 (off) or >= 2");
  check(c.restorer.lambda_cyc >= 0 && c.restorer.beta_ide >= 0, "restorer.lambda and restorer.beta must be >= 0");
  check(c.restorer.passes >= 0 && c.restorer.passes <= 2, "restorer.passes must be 0, 1 or 2");
  check(c.restorer.learning_rate > 0, "restorer.learning_rate must be positive");
  check(c.restorer.batch_size >= 2, "restorer.batch_size must be >= 2");
  check(valid_q(c.restorer.q), "restorer.q must be one of 1, 3, 5, 7");
  check(c.restorer.width >= 1, "restorer.width must be positive");
  check(!c.classifier.q.empty(), "classifier.q must list at least one order");
  for (auto q : c.classifier.q) check(valid_q(q), fmt::format("classifier.q: {} is not one of 1, 3, 5, 7", q));
  check(c.classifier.width >= 4, "classifier.width must be >= 4");
  check(c.classifier.batch_size >= 2, "classifier.batch_size must be >= 2");
  check(c.classifier.learning_rate > 0, "classifier.learning_rate must be positive");
  check(c.entropy.m >= 1 && c.entropy.r > 0 && c.entropy.fuzzy_power >= 1 && c.entropy.perm_order >= 2,
        "entropy: need m >= 1, r > 0, fuzzy_power >= 1, perm_order >= 2");
  check(!c.test_splits.empty(), "split.test must list at least one split");
  for (int s : c.test_splits) check(s == 1 || s == 2, fmt::format("split.test: {} is not 1 or 2", s));
}

// ---------------------------------------------------------------------------
// Stage plumbing

fs::path segments_dir(const PipelineConfig& c) { return c.output / "segments"; }
fs::path reports_dir(const PipelineConfig& c) { return c.output / "reports"; }
fs::path logs_dir(const PipelineConfig& c) { return c.output / "logs"; }
fs::path gate_path(const PipelineConfig& c) {
  return c.quality.model_path.empty() ? c.checkpoint_dir() / "quality_gate.opnn" : c.quality.model_path;
}
fs::path restorer_path(const PipelineConfig& c) { return c.checkpoint_dir() / "restorer.opnn"; }
fs::path classifier_path(const PipelineConfig& c, const std::string& branch, int split, std::size_t q) {
  return c.checkpoint_dir() / ("clf_" + report::file_stem(branch, split, q) + ".opnn");
}

void write_file(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(path.string(), 0, "cannot write file");
  out << text;
}

void need_file(const fs::path& path, const char* stage) {
  if (!fs::exists(path)) {
    throw Error(ErrorKind::Data, fmt::format("missing '{}'; run the '{}' stage first", path.string(), stage));
  }
}

std::vector<sig::Segment> need_segments(const PipelineConfig& c, const std::string& name, const char* stage) {
  if (!data::segments_exist(segments_dir(c), name)) {
    throw Error(ErrorKind::Data,
                fmt::format("missing segment set '{}' in {}; run the '{}' stage first", name,
                            segments_dir(c).string(), stage));
  }
  return data::load_segments(segments_dir(c), name);
}

afnet::ModelConfig gate_model(const PipelineConfig& c) {
  afnet::ModelConfig m;
  m.q = c.quality.q;
  m.width = c.quality.width;
  m.seed = c.seed;
  return m;
}

afnet::TrainConfig gate_training(const PipelineConfig& c) {
  return afnet::TrainConfig{c.quality.batch_size, c.quality.epochs, c.quality.learning_rate, 0.0, c.seed};
}

afnet::ModelConfig classifier_model(const PipelineConfig& c, std::size_t q, int split) {
  afnet::ModelConfig m;
  m.q = q;
  m.width = c.classifier.width;
  m.seed = c.seed + 1000 * static_cast<std::uint64_t>(split) + q;
  return m;
}

restorer::CycleGanConfig gan_config(const PipelineConfig& c) {
  restorer::CycleGanConfig g;
  g.lambda_cyc = c.restorer.lambda_cyc;
  g.beta_ide = c.restorer.beta_ide;
  g.learning_rate = c.restorer.learning_rate;
  g.epochs = c.restorer.epochs;
  g.batch_size = c.restorer.batch_size;
  g.seed = c.seed;
  g.generator.q = c.restorer.q;
  g.generator.width = c.restorer.width;
  g.generator.residual_blocks = c.restorer.residual_blocks;
  g.discriminator.q = c.restorer.q;
  return g;
}

struct Branch {
  std::string name;
  std::string segment_set;
  const char* stage;
};

std::vector<Branch> branches(const PipelineConfig& c) {
  std::vector<Branch> out{{"raw_ppg", "gated_ppg", "qc-apply"}, {"ecg", "gated_ecg", "qc-apply"}};
  if (c.restorer.passes > 0) {
    out.push_back({"restored_ppg", fmt::format("restored_pass{}", c.restorer.passes), "restore"});
  }
  return out;
}

std::vector<afnet::Example> labelled(const std::vector<sig::Segment>& segments, int split, bool in_split) {
  std::vector<sig::Segment> chosen;
  for (const auto& s : segments) {
    if ((s.split == split) == in_split) chosen.push_back(s);
  }
  return afnet::rhythm_examples(chosen);
}

void log_line(const std::string& message) { fmt::print(stderr, "[opnn] {}\n", message); }

}  // namespace

// ---------------------------------------------------------------------------

PipelineConfig parse_config(const std::string& json_text, const fs::path& base) {
  json doc;
  try {
    doc = json_text.empty() ? json::object() : json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::Config, std::string("config is not valid JSON: ") + e.what());
  }
  PipelineConfig c;
  Reader root(doc, "config");
  {
    auto r = root.child("paths");
    r.get_path("manifest", c.manifest, base);
    r.get_path("output", c.output, base);
    r.get_path("checkpoints", c.checkpoints, base);
    r.finish();
  }
  {
    auto r = root.child("preprocess");
    r.get("window_s", c.preprocess.window_s);
    r.get("baseline_window_s", c.preprocess.baseline_window_s);
    r.get("poly_order", c.preprocess.baseline_poly_order);
    r.get("filter_order", c.preprocess.filter_order);
    r.band("ecg_band_hz", c.preprocess.ecg_low_hz, c.preprocess.ecg_high_hz);
    r.band("ppg_band_hz", c.preprocess.ppg_low_hz, c.preprocess.ppg_high_hz);
    r.finish();
  }
  {
    auto r = root.child("quality");
    r.get_path("model_path", c.quality.model_path, base);
    r.get("q", c.quality.q);
    r.get("width", c.quality.width);
    r.get("epochs", c.quality.epochs);
    r.get("learning_rate", c.quality.learning_rate);
    r.get("batch_size", c.quality.batch_size);
    r.get("kfold", c.quality.kfold);
    r.finish();
  }
  {
    auto r = root.child("restorer");
    r.get("lambda", c.restorer.lambda_cyc);
    r.get("beta", c.restorer.beta_ide);
    r.get("epochs", c.restorer.epochs);
    r.get("learning_rate", c.restorer.learning_rate);
    r.get("batch_size", c.restorer.batch_size);
    r.get("passes", c.restorer.passes);
    r.get("q", c.restorer.q);
    r.get("width", c.restorer.width);
    r.get("residual_blocks", c.restorer.residual_blocks);
    r.finish();
  }
  {
    auto r = root.child("classifier");
    r.get("q", c.classifier.q);
    r.get("width", c.classifier.width);
    r.get("epochs", c.classifier.epochs);
    r.get("learning_rate", c.classifier.learning_rate);
    r.get("batch_size", c.classifier.batch_size);
    r.finish();
  }
  {
    auto r = root.child("entropy");
    r.get("m", c.entropy.m);
    r.get("r", c.entropy.r);
    r.get("r_absolute", c.entropy.r_is_absolute);
    r.get("fuzzy_power", c.entropy.fuzzy_power);
    r.get("perm_order", c.entropy.perm_order);
    r.get("normalize_perm", c.entropy.normalize_perm);
    r.finish();
  }
  {
    auto r = root.child("split");
    r.get("test", c.test_splits);
    r.finish();
  }
  root.get("seed", c.seed);
  root.finish();
  validate(c);
  return c;
}

PipelineConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Config, fmt::format("cannot open config '{}'", path.string()));
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_config(text, path.parent_path());
}

std::string dump_config(const PipelineConfig& c) {
  json j;
  j["paths"] = {{"manifest", c.manifest.string()},
                {"output", c.output.string()},
                {"checkpoints", c.checkpoint_dir().string()}};
  j["preprocess"] = {{"window_s", c.preprocess.window_s},
                     {"baseline_window_s", c.preprocess.baseline_window_s},
                     {"poly_order", c.preprocess.baseline_poly_order},
                     {"filter_order", c.preprocess.filter_order},
                     {"ecg_band_hz", {c.preprocess.ecg_low_hz, c.preprocess.ecg_high_hz}},
                     {"ppg_band_hz", {c.preprocess.ppg_low_hz, c.preprocess.ppg_high_hz}}};
  j["quality"] = {{"model_path", c.quality.model_path.string()},
                  {"q", c.quality.q},
                  {"width", c.quality.width},
                  {"epochs", c.quality.epochs},
                  {"learning_rate", c.quality.learning_rate},
                  {"batch_size", c.quality.batch_size},
                  {"kfold", c.quality.kfold}};
  j["restorer"] = {{"lambda", c.restorer.lambda_cyc},     {"beta", c.restorer.beta_ide},
                   {"epochs", c.restorer.epochs},         {"learning_rate", c.restorer.learning_rate},
                   {"batch_size", c.restorer.batch_size}, {"passes", c.restorer.passes},
                   {"q", c.restorer.q},                   {"width", c.restorer.width},
                   {"residual_blocks", c.restorer.residual_blocks}};
  j["classifier"] = {{"q", c.classifier.q},
                     {"width", c.classifier.width},
                     {"epochs", c.classifier.epochs},
                     {"learning_rate", c.classifier.learning_rate},
                     {"batch_size", c.classifier.batch_size}};
  j["entropy"] = {{"m", c.entropy.m},
                  {"r", c.entropy.r},
                  {"r_absolute", c.entropy.r_is_absolute},
                  {"fuzzy_power", c.entropy.fuzzy_power},
                  {"perm_order", c.entropy.perm_order},
                  {"normalize_perm", c.entropy.normalize_perm}};
  j["split"] = {{"test", c.test_splits}};
  j["seed"] = c.seed;
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Stages

void run_ingest(const PipelineConfig& c) {
  if (c.manifest.empty()) throw Error(ErrorKind::Config, "paths.manifest is not set");
  const auto dataset = data::ingest(c.manifest);
  json summary;
  summary["manifest"] = fs::absolute(c.manifest).lexically_normal().string();
  summary["recordings"] = json::array();
  for (std::size_t i = 0; i < dataset.recordings.size(); ++i) {
    const auto& r = dataset.recordings[i];
    summary["recordings"].push_back({{"subject_id", r.subject_id},
                                     {"modality", sig::to_string(r.modality)},
                                     {"sample_rate_hz", r.sample_rate_hz},
                                     {"samples", r.samples.size()},
                                     {"split", dataset.splits[i]}});
  }
  summary["annotations"] = dataset.manifest.annotations.size();
  summary["quality_annotations"] = dataset.manifest.quality.size();
  write_file(c.output / "ingest" / "summary.json", summary.dump(1) + "\n");
  log_line(fmt::format("ingest: {} recordings", dataset.recordings.size()));
}

void run_preprocess(const PipelineConfig& c) {
  need_file(c.output / "ingest" / "summary.json", "ingest");
  const auto dataset = data::ingest(c.manifest);
  const auto sets = data::segment_dataset(dataset, c.preprocess);
  data::save_segments(segments_dir(c), "preprocessed_ecg", sets.ecg);
  data::save_segments(segments_dir(c), "preprocessed_ppg", sets.ppg);
  log_line(fmt::format("preprocess: {} paired windows, {} unpaired dropped", sets.ppg.size(), sets.unpaired_dropped));
}

void run_qc_train(const PipelineConfig& c) {
  if (!c.quality.model_path.empty()) {
    need_file(c.quality.model_path, "qc-train");
    log_line("qc-train: using configured gate " + c.quality.model_path.string());
    return;
  }
  const auto ppg = need_segments(c, "preprocessed_ppg", "preprocess");
  const auto examples = afnet::quality_examples(ppg);
  if (examples.empty()) {
    throw Error(ErrorKind::Data, "qc-train: no quality-annotated PPG windows; add quality_annotations to the manifest "
                                 "or set quality.model_path");
  }

  if (c.quality.kfold >= 2) {
    const auto folds = afnet::kfold_evaluate(examples, c.quality.kfold, gate_model(c), gate_training(c));
    std::string csv = "Fold,Accuracy,Precision,Sensitivity,F1_score,Specificity,TP,TN,FP,FN\n";
    metrics::ConfusionMatrix total;
    auto row = [&](const std::string& name, const metrics::ConfusionMatrix& cm) {
      const auto m = metrics::metrics(cm);
      csv += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", name, metrics::format_metric(m.accuracy),
                         metrics::format_metric(m.precision), metrics::format_metric(m.sensitivity),
                         metrics::format_metric(m.f1), metrics::format_metric(m.specificity), cm.tp, cm.tn, cm.fp,
                         cm.fn);
    };
    for (std::size_t f = 0; f < folds.size(); ++f) {
      row(std::to_string(f + 1), folds[f].confusion);
      total += folds[f].confusion;
    }
    row("Overall", total);
    write_file(reports_dir(c) / "quality_kfold.csv", csv);
  }

  afnet::Model gate(gate_model(c));
  const auto log = afnet::train(gate, examples, gate_training(c));
  write_file(logs_dir(c) / "qc_train.csv", log.csv());
  fs::create_directories(c.checkpoint_dir());
  save_checkpoint(gate_path(c), {{"afnet", &gate}});
  log_line(fmt::format("qc-train: gate trained on {} windows", examples.size()));
}

void run_qc_apply(const PipelineConfig& c) {
  need_file(gate_path(c), "qc-train");
  auto ppg = need_segments(c, "preprocessed_ppg", "preprocess");
  auto ecg = need_segments(c, "preprocessed_ecg", "preprocess");
  afnet::Model gate(gate_model(c));
  load_checkpoint(gate_path(c), {{"afnet", &gate}});
  const auto part = afnet::quality_gate(gate, ppg);

  // A corrupted PPG window takes its ECG partner with it.
  std::set<sig::SegmentKey> kept;
  std::vector<sig::Segment> gated_ppg;
  for (auto i : part.acceptable) {
    kept.insert(ppg[i].source);
    gated_ppg.push_back(ppg[i]);
  }
  std::vector<sig::Segment> gated_ecg;
  for (auto& s : ecg) {
    if (!kept.count(s.source)) continue;
    s.quality = sig::Quality::Acceptable;
    gated_ecg.push_back(s);
  }
  if (part.acceptable.size() + part.corrupted.size() != ppg.size()) {
    throw Error(ErrorKind::Numeric, "qc-apply: gate partition does not cover every segment");
  }
  data::save_segments(segments_dir(c), "gated_ppg", gated_ppg);
  data::save_segments(segments_dir(c), "gated_ecg", gated_ecg);
  json summary{{"ingested", ppg.size()}, {"acceptable", part.acceptable.size()}, {"corrupted", part.corrupted.size()}};
  write_file(reports_dir(c) / "quality_summary.json", summary.dump(1) + "\n");
  log_line(fmt::format("qc-apply: {} acceptable, {} corrupted", part.acceptable.size(), part.corrupted.size()));
}

void run_restore_train(const PipelineConfig& c) {
  const auto ppg = need_segments(c, "gated_ppg", "qc-apply");
  const auto domains = restorer::entropy_domains(ppg);
  std::vector<sig::Segment> clean;
  std::vector<sig::Segment> corrupted;
  for (auto i : domains.clean) clean.push_back(ppg[i]);
  for (auto i : domains.corrupted) corrupted.push_back(ppg[i]);
  restorer::CycleGanState state(gan_config(c));
  const auto log = restorer::train_cyclegan(corrupted, clean, state);
  write_file(logs_dir(c) / "restorer.csv", log.csv());
  fs::create_directories(c.checkpoint_dir());
  save_checkpoint(restorer_path(c), state.sections());
  log_line(fmt::format("restore-train: {} clean / {} corrupted windows", clean.size(), corrupted.size()));
}

void run_restore(const PipelineConfig& c) {
  need_file(restorer_path(c), "restore-train");
  const auto ppg = need_segments(c, "gated_ppg", "qc-apply");
  restorer::CycleGanState state(gan_config(c));
  load_checkpoint(restorer_path(c), state.sections());
  std::vector<sig::Segment> pass1;
  std::vector<sig::Segment> pass2;
  for (const auto& s : ppg) {
    pass1.push_back(restorer::restore(s, state, 1));
    pass2.push_back(restorer::restore(pass1.back(), state, 1));
  }
  data::save_segments(segments_dir(c), "restored_pass1", pass1);
  data::save_segments(segments_dir(c), "restored_pass2", pass2);
  log_line(fmt::format("restore: {} windows", ppg.size()));
}

void run_entropy_report(const PipelineConfig& c) {
  const auto before = need_segments(c, "gated_ppg", "qc-apply");
  const auto pass1 = need_segments(c, "restored_pass1", "restore");
  const auto pass2 = need_segments(c, "restored_pass2", "restore");
  const auto rep = entropy::entropy_report(before, pass1, pass2, c.entropy);
  write_file(reports_dir(c) / "entropy.csv", entropy::report_csv(rep));
  log_line("entropy-report: written");
}

void run_clf_train(const PipelineConfig& c) {
  for (const auto& branch : branches(c)) {
    const auto segments = need_segments(c, branch.segment_set, branch.stage);
    for (int split : c.test_splits) {
      const auto train_set = labelled(segments, split, false);
      for (auto q : c.classifier.q) {
        afnet::Model model(classifier_model(c, q, split));
        const afnet::TrainConfig tc{c.classifier.batch_size, c.classifier.epochs, c.classifier.learning_rate, 0.0,
                                    c.seed + static_cast<std::uint64_t>(split)};
        const auto log = afnet::train(model, train_set, tc);
        const auto stem = report::file_stem(branch.name, split, q);
        write_file(logs_dir(c) / ("clf_" + stem + ".csv"), log.csv());
        fs::create_directories(c.checkpoint_dir());
        save_checkpoint(classifier_path(c, branch.name, split, q), {{"afnet", &model}});
        log_line(fmt::format("clf-train: {} on {} windows", stem, train_set.size()));
      }
    }
  }
}

void run_evaluate(const PipelineConfig& c) {
  std::size_t warnings = 0;
  for (int split : c.test_splits) {
    std::map<std::size_t, std::vector<report::ClassifierResult>> by_q;
    for (const auto& branch : branches(c)) {
      const auto segments = need_segments(c, branch.segment_set, branch.stage);
      const auto test_set = labelled(segments, split, true);
      std::vector<report::ClassifierResult> results;
      std::vector<std::pair<std::string, metrics::RocCurve>> curves;
      for (auto q : c.classifier.q) {
        const auto path = classifier_path(c, branch.name, split, q);
        need_file(path, "clf-train");
        afnet::Model model(classifier_model(c, q, split));
        load_checkpoint(path, {{"afnet", &model}});

        report::ClassifierResult r;
        r.branch = branch.name;
        r.split = split;
        r.q = q;
        std::vector<int> predicted;
        for (const auto& e : test_set) {
          const auto p = afnet::predict(model, e.input);
          predicted.push_back(p.label);
          r.scores.push_back(p.score);
          r.labels.push_back(e.label);
        }
        r.confusion = metrics::confusion(predicted, r.labels, 1);
        const auto stem = report::file_stem(branch.name, split, q);
        const bool both = std::count(r.labels.begin(), r.labels.end(), 1) > 0 &&
                          std::count(r.labels.begin(), r.labels.end(), 0) > 0;
        if (both) {
          auto roc = metrics::roc_auc(r.scores, r.labels);
          write_file(reports_dir(c) / ("roc_" + stem + ".csv"), report::roc_csv(roc.curve));
          curves.emplace_back(fmt::format("Q{} (AUC {:.3f})", q, roc.auc), roc.curve);
        } else {
          ++warnings;
          log_line(fmt::format("evaluate: {} test set lacks a class; ROC skipped", stem));
        }
        results.push_back(r);
        by_q[q].push_back(r);
      }
      warnings += report::undefined_cells(results);
      const auto base = fmt::format("split{}_{}", split, branch.name);
      write_file(reports_dir(c) / ("metrics_" + base + ".csv"), report::metrics_csv(results));
      write_file(reports_dir(c) / ("confusion_" + base + ".csv"), report::confusion_csv(results));
      if (!curves.empty()) {
        write_file(reports_dir(c) / ("roc_" + base + ".svg"),
                   report::roc_svg(curves, fmt::format("ROC, {} (test split {})", branch.name, split)));
      }
    }
    for (const auto& [q, results] : by_q) {
      const auto base = fmt::format("comparison_split{}_q{}", split, q);
      write_file(reports_dir(c) / (base + ".csv"), report::branch_comparison_csv(results));
      std::vector<report::Series> series;
      for (const auto& r : results) {
        const auto w = metrics::class_report(r.confusion).weighted;
        series.push_back({r.branch, {w.accuracy, w.precision, w.sensitivity, w.f1, w.specificity}});
      }
      write_file(reports_dir(c) / (base + ".svg"),
                 report::bar_chart_svg({"Accuracy", "Precision", "Sensitivity", "F1_score", "Specificity"}, series,
                                       fmt::format("Weighted metrics, Q{} (test split {})", q, split)));
    }
  }
  log_line(fmt::format("evaluate: reports written, {} warning(s)", warnings));
}

void run_pipeline(const PipelineConfig& c) {
  fs::create_directories(c.output);
  write_file(c.output / "effective_config.json", dump_config(c));
  run_ingest(c);
  run_preprocess(c);
  run_qc_train(c);
  run_qc_apply(c);
  if (c.restorer.passes > 0) {
    run_restore_train(c);
    run_restore(c);
    run_entropy_report(c);
  }
  run_clf_train(c);
  run_evaluate(c);
}

// ---------------------------------------------------------------------------

void write_synthetic_dataset(const fs::path& dir, const SynthDatasetConfig& config) {
  fs::create_directories(dir);
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  json manifest{{"recordings", json::array()}, {"annotations", json::array()}, {"quality_annotations", json::array()}};
  const double window = sig::kSegmentLength / sig::kSegmentRateHz;
  const auto windows = static_cast<std::size_t>(config.duration_s / window);

  for (std::size_t s = 0; s < config.subjects; ++s) {
    const auto subject = fmt::format("S{:02}", s + 1);
    // Rhythm episodes of whole windows, alternating with a random first label.
    std::vector<double> beats;
    bool af = unit(rng) < 0.5;
    std::size_t w = 0;
    while (w < windows) {
      const auto length = std::min<std::size_t>(windows - w, 2 + static_cast<std::size_t>(unit(rng) * 4));
      const double start = static_cast<double>(w) * window;
      const double end = static_cast<double>(w + length) * window;
      const double rate = 60.0 + 40.0 * unit(rng);
      const double jitter = af ? 0.15 + 0.2 * unit(rng) : 0.005 + 0.015 * unit(rng);
      const auto episode = synth::beat_times(rng, beats.empty() ? unit(rng) * 0.8 : beats.back() + 60.0 / rate, end,
                                             rate, jitter);
      beats.insert(beats.end(), episode.begin(), episode.end());
      manifest["annotations"].push_back(
          {{"subject_id", subject}, {"start_s", start}, {"end_s", end}, {"label", af ? "AF" : "NonAF"}});
      w += length;
      af = !af;
    }

    const auto ecg_n = static_cast<std::size_t>(config.duration_s * 500.0);
    const auto ppg_n = static_cast<std::size_t>(config.duration_s * 125.0);
    auto ecg = synth::render_ecg(beats, 500.0, ecg_n, 0.02, rng);
    auto ppg = synth::render_ppg(beats, 125.0, ppg_n, 0.02, rng);
    for (std::size_t k = 0; k < windows; ++k) {
      const bool bad = unit(rng) < config.corrupted_fraction;
      const double start = static_cast<double>(k) * window;
      if (bad) {
        const auto begin = static_cast<std::size_t>(start * 125.0);
        const auto span = static_cast<std::size_t>(window * 125.0);
        const auto noise = synth::white_noise(rng, span);
        for (std::size_t i = 0; i < span && begin + i < ppg.size(); ++i) ppg[begin + i] = 0.8 * noise[i];
      }
      manifest["quality_annotations"].push_back({{"subject_id", subject},
                                                 {"start_s", start},
                                                 {"end_s", start + window},
                                                 {"quality", bad ? "Corrupted" : "Acceptable"}});
    }
    for (auto& v : ppg) v = 200.0 + 50.0 * v;  // arbitrary sensor units and offset

    const auto ecg_file = subject + "_ecg.f32";
    const auto ppg_file = subject + "_ppg.f32";
    data::write_signal_f32(dir / ecg_file, ecg);
    data::write_signal_f32(dir / ppg_file, ppg);
    write_file(dir / (ppg_file + ".json"), json{{"sample_rate_hz", 125.0}, {"modality", "PPG"}}.dump() + "\n");
    write_file(dir / (ecg_file + ".json"), json{{"sample_rate_hz", 500.0}, {"modality", "ECG"}}.dump() + "\n");
    manifest["recordings"].push_back({{"file", ecg_file},
                                      {"subject_id", subject},
                                      {"modality", "ECG"},
                                      {"sample_rate_hz", 500.0},
                                      {"start_time_s", 0.0}});
    manifest["recordings"].push_back({{"file", ppg_file},
                                      {"subject_id", subject},
                                      {"modality", "PPG"},
                                      {"sample_rate_hz", 125.0},
                                      {"start_time_s", 0.0}});
  }
  write_file(dir / "manifest.json", manifest.dump(1) + "\n");
}

}  // namespace opnn::pipeline
