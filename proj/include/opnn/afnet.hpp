#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "opnn/layers.hpp"
#include "opnn/metrics.hpp"
#include "opnn/optim.hpp"
#include "opnn/sigproc.hpp"

namespace opnn::afnet {

struct ModelConfig {
  std::size_t q = 3;
  /// Channel count of the stem and of every block's input/output.
  std::size_t width = 16;
  std::size_t expansion = 4;
  std::size_t hidden = 32;
  std::size_t blocks = 3;
  std::size_t pooled_length = 12;
  std::size_t stem_kernel = 40;
  std::size_t stem_stride = 20;
  std::uint64_t seed = 0;
};

/// expand (k1) -> depthwise (k3) -> contract (k1), each with BatchNorm and
/// Tanh, plus an identity skip followed by Tanh.
class Block final : public Module<float> {
 public:
  Block(std::size_t channels, std::size_t expansion, std::size_t q);

  Sequential<float>& body() noexcept { return residual_->body(); }
  void initialize(std::mt19937_64& rng);

  Batch<float> forward(const Batch<float>& input, Pass& pass) override;
  Batch<float> backward(const Batch<float>& grad_output, Pass& pass) override;
  void collect(std::vector<Parameter<float>*>& out) override { seq_.collect(out); }
  void records(std::vector<LayerRecord<float>>& out) override { seq_.records(out); }
  std::string name() const override { return "SelfAfnetBlock"; }

 private:
  Sequential<float> seq_;
  Residual<float>* residual_ = nullptr;
};

/// stem -> BN -> Tanh -> blocks -> adaptive pool -> flatten -> hidden FC ->
/// BN -> Tanh -> 2 logits. Fully connected layers are kernel-1 generative
/// layers over the flattened feature.
class Model final : public Module<float> {
 public:
  explicit Model(const ModelConfig& config);

  const ModelConfig& config() const noexcept { return config_; }
  std::size_t block_count() const noexcept { return blocks_.size(); }
  Block& block(std::size_t i) { return *blocks_.at(i); }
  /// Every generative layer in forward order.
  const std::vector<SelfOnn1d<float>*>& generative_layers() const noexcept { return gnls_; }

  Batch<float> forward(const Batch<float>& input, Pass& pass) override;
  Batch<float> backward(const Batch<float>& grad_output, Pass& pass) override;
  void collect(std::vector<Parameter<float>*>& out) override { seq_.collect(out); }
  void records(std::vector<LayerRecord<float>>& out) override { seq_.records(out); }
  std::string name() const override { return "SelfAfnet"; }

 private:
  ModelConfig config_;
  Sequential<float> seq_;
  std::vector<Block*> blocks_;
  std::vector<SelfOnn1d<float>*> gnls_;
};

Model build_model(std::size_t q, std::size_t width, std::uint64_t seed);
Model build_model(const ModelConfig& config);

struct ParameterCount {
  std::size_t nodal_weights = 0;
  std::size_t biases = 0;
  std::size_t batchnorm = 0;

  std::size_t total() const noexcept { return nodal_weights + biases + batchnorm; }
};

/// Trainable parameters, split by kind. A pure function of the configuration.
ParameterCount count_parameters(const ModelConfig& config);
ParameterCount count_parameters(Model& model);

/// A single-channel float tensor holding the samples.
Tensor<float> segment_tensor(std::span<const double> samples);

struct Example {
  Tensor<float> input;
  int label = 0;
};

/// AF = 1, NonAF = 0. Unlabeled segments are skipped.
std::vector<Example> rhythm_examples(const std::vector<sig::Segment>& segments);
/// Corrupted = 1, Acceptable = 0. Unassessed segments are skipped.
std::vector<Example> quality_examples(const std::vector<sig::Segment>& segments);

struct TrainConfig {
  std::size_t batch_size = 16;
  std::size_t epochs = 20;
  double learning_rate = 0.25;
  double momentum = 0.0;
  std::uint64_t seed = 0;
};

struct EpochStats {
  std::size_t epoch = 0;
  double loss = 0;
  double accuracy = 0;
};

struct TrainLog {
  std::vector<EpochStats> epochs;
  std::string csv() const;
};

/// Mini-batch SGD on softmax cross-entropy with seeded shuffling. A final
/// batch of one sample is merged into the previous batch (batch norm needs
/// two samples in train mode).
TrainLog train(Model& model, const std::vector<Example>& data, const TrainConfig& config);

/// Mean cross-entropy and the logit gradient for a batch of 2-logit outputs.
double cross_entropy(const Batch<float>& logits, const std::vector<int>& labels, Batch<float>* grad = nullptr);

struct Prediction {
  int label = 0;
  /// Softmax probability of class 1.
  double score = 0;
};

Prediction softmax_prediction(double logit0, double logit1);
Prediction predict(Model& model, const Tensor<float>& input);
std::vector<Prediction> predict(Model& model, const std::vector<Example>& data);

struct GatePartition {
  std::vector<std::size_t> acceptable;
  std::vector<std::size_t> corrupted;
};

/// Tags every segment's quality from the Corrupted score at threshold 0.5.
GatePartition quality_gate(Model& model, std::vector<sig::Segment>& segments);

/// Seeded stratified partition into k test folds (indices into `labels`).
std::vector<std::vector<std::size_t>> stratified_folds(const std::vector<int>& labels, std::size_t k,
                                                       std::uint64_t seed);

struct FoldResult {
  metrics::ConfusionMatrix confusion;
  std::vector<double> scores;
  std::vector<int> labels;
};

/// Trains a fresh model per fold and evaluates it on the held-out fold.
std::vector<FoldResult> kfold_evaluate(const std::vector<Example>& data, std::size_t k, const ModelConfig& model,
                                       const TrainConfig& config);

}  // namespace opnn::afnet
