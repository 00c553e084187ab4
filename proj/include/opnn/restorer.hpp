#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "opnn/checkpoint.hpp"
#include "opnn/layers.hpp"
#include "opnn/optim.hpp"
#include "opnn/sigproc.hpp"

namespace opnn::restorer {

struct GeneratorConfig {
  std::size_t q = 3;
  /// Channels after the first encoder stage; the second doubles it.
  std::size_t width = 4;
  std::size_t residual_blocks = 12;
};

/// Encoder (two stride-2 stages) -> residual body -> decoder (two x2
/// upsampling stages) -> kernel-7 head -> Tanh -> [0, 1]. Input lengths must
/// be multiples of 4 so the decoder restores the exact length.
class GeneratorNet final : public Module<float> {
 public:
  explicit GeneratorNet(const GeneratorConfig& config, std::uint64_t seed = 0);

  const GeneratorConfig& config() const noexcept { return config_; }

  Batch<float> forward(const Batch<float>& input, Pass& pass) override;
  Batch<float> backward(const Batch<float>& grad_output, Pass& pass) override;
  void collect(std::vector<Parameter<float>*>& out) override { seq_.collect(out); }
  void records(std::vector<LayerRecord<float>>& out) override { seq_.records(out); }
  std::string name() const override { return "GeneratorNet"; }

 private:
  GeneratorConfig config_;
  Sequential<float> seq_;
};

struct DiscriminatorConfig {
  std::size_t q = 3;
  /// Output channels of the first five stages; the sixth emits one channel.
  std::vector<std::size_t> widths = {2, 4, 8, 8, 8};
};

/// Six kernel-4, stride-2 generative layers with Tanh between them; emits a
/// one-channel sequence of patch scores (39 for a 2500-sample input).
class DiscriminatorNet final : public Module<float> {
 public:
  explicit DiscriminatorNet(const DiscriminatorConfig& config, std::uint64_t seed = 0);

  Batch<float> forward(const Batch<float>& input, Pass& pass) override;
  Batch<float> backward(const Batch<float>& grad_output, Pass& pass) override;
  void collect(std::vector<Parameter<float>*>& out) override { seq_.collect(out); }
  void records(std::vector<LayerRecord<float>>& out) override { seq_.records(out); }
  std::string name() const override { return "DiscriminatorNet"; }

 private:
  Sequential<float> seq_;
};

/// Mean squared deviation of every patch score from 1 (real) or 0 (fake).
/// When `grad` is given it receives d(loss)/d(scores).
double adversarial_loss(const Batch<float>& scores, bool target_real, Batch<float>* grad = nullptr);

/// Mean absolute error over samples and time; `grad` receives the
/// subgradient with respect to `a`.
double mean_abs_error(const Batch<float>& a, const Batch<float>& b, Batch<float>* grad = nullptr);

/// |GC2X(GX2C(x)) - x| + |GX2C(GC2X(c)) - c|, each a mean absolute error.
double cycle_loss(const Batch<float>& x, const Batch<float>& c, Module<float>& g_x2c, Module<float>& g_c2x);

/// |GX2C(c) - c| + |GC2X(x) - x|.
double identity_loss(const Batch<float>& x, const Batch<float>& c, Module<float>& g_x2c, Module<float>& g_c2x);

struct LossComponents {
  double adv1 = 0;
  double adv2 = 0;
  double cycle = 0;
  double identity = 0;
};

double total_loss(const LossComponents& parts, double lambda_cyc, double beta_ide);

struct CycleGanConfig {
  double lambda_cyc = 0.5;
  double beta_ide = 0.25;
  double learning_rate = 0.0005;
  double adam_beta1 = 0.5;
  double adam_beta2 = 0.999;
  std::size_t epochs = 150;
  std::size_t batch_size = 16;
  std::size_t replay_size = 50;
  double clip_norm = 5.0;
  std::uint64_t seed = 0;
  GeneratorConfig generator;
  DiscriminatorConfig discriminator;
};

/// History of generated samples; once full, each query swaps an incoming
/// fake for a stored one with probability 1/2.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {}

  Batch<float> query(const Batch<float>& fakes, std::mt19937_64& rng);
  std::size_t size() const noexcept { return stored_.size(); }

 private:
  std::size_t capacity_;
  std::vector<Tensor<float>> stored_;
};

struct CycleGanState {
  explicit CycleGanState(const CycleGanConfig& config);

  CycleGanConfig config;
  GeneratorNet g_x2c;
  GeneratorNet g_c2x;
  DiscriminatorNet d_c;
  DiscriminatorNet d_x;
  OptimizerState opt_g_x2c;
  OptimizerState opt_g_c2x;
  OptimizerState opt_d_c;
  OptimizerState opt_d_x;
  ReplayBuffer replay_c;
  ReplayBuffer replay_x;
  std::mt19937_64 rng;
  std::size_t generator_updates = 0;
  std::size_t discriminator_updates = 0;

  std::vector<CheckpointSection> sections();
};

struct GanEpochStats {
  std::size_t epoch = 0;
  double adversarial = 0;
  double cycle = 0;
  double identity = 0;
  double total = 0;
  double disc_c = 0;
  double disc_x = 0;
};

struct GanLog {
  std::vector<GanEpochStats> epochs;
  std::string csv() const;
};

/// Unpaired training: per iteration, one joint generator update followed by
/// one update of each discriminator against replayed fakes. Each epoch walks
/// the larger domain once; the smaller one is drawn cyclically from its own
/// shuffle.
GanLog train_cyclegan(const std::vector<sig::Segment>& corrupted, const std::vector<sig::Segment>& clean,
                      CycleGanState& state);

/// g_x2c applied `passes` times in eval mode, clamped to [0, 1].
sig::Segment restore(const sig::Segment& segment, CycleGanState& state, int passes = 1);

struct DomainSplit {
  /// Lowest-SampEn quartile.
  std::vector<std::size_t> clean;
  /// Highest-SampEn quartile.
  std::vector<std::size_t> corrupted;
};

/// Ranks Acceptable segments by sample entropy. Undefined (infinite) values
/// rank as most irregular; ties keep input order.
DomainSplit entropy_domains(const std::vector<sig::Segment>& segments);

}  // namespace opnn::restorer
