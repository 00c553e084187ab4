#include "opnn/restorer.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "opnn/entropy.hpp"

namespace opnn::restorer {

namespace {

void initialize_all(Module<float>& module, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<LayerRecord<float>> recs;
  module.records(recs);
  // Same scheme as SelfOnn1d::initialize, reached through the layer records
  // so layers nested in residual bodies are covered too.
  for (const auto& r : recs) {
    if (r.tag != LayerTag::SelfOnn) continue;
    const double fan = static_cast<double>(r.shape[1]) * r.shape[2] * r.shape[3];
    std::uniform_real_distribution<double> dist(-1.0 / std::sqrt(fan), 1.0 / std::sqrt(fan));
    for (auto* p : r.blocks) {
      for (auto& v : p->value) v = static_cast<float>(dist(rng));
    }
  }
}

void add_norm(Sequential<float>& seq, std::size_t channels) {
  seq.emplace<BatchNorm1d<float>>(BatchNormConfig{channels});
  seq.emplace<Tanh<float>>();
}

Batch<float> to_batch(const std::vector<sig::Segment>& segments, const std::vector<std::size_t>& order,
                      std::size_t begin, std::size_t count) {
  Batch<float> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto& s = segments[order[(begin + i) % order.size()]].samples;
    out.emplace_back(1, s.size(), std::vector<float>(s.begin(), s.end()));
  }
  return out;
}

Batch<float> add(const Batch<float>& a, const Batch<float>& b) {
  Batch<float> out = a;
  for (std::size_t i = 0; i < out.size(); ++i) {
    auto o = out[i].values();
    auto v = b[i].values();
    for (std::size_t j = 0; j < o.size(); ++j) o[j] += v[j];
  }
  return out;
}

Batch<float> scaled(Batch<float> a, float s) {
  for (auto& t : a) {
    for (auto& v : t.values()) v *= s;
  }
  return a;
}

Batch<float> run(Module<float>& m, const Batch<float>& x) {
  Pass pass(Mode::Eval, false);
  return m.forward(x, pass);
}

void update(Module<float>& net, OptimizerState& opt, double clip) {
  auto params = net.parameters();
  clip_grad_norm<float>(params, clip);
  optimizer_step<float>(params, opt);
}

}  // namespace

GeneratorNet::GeneratorNet(const GeneratorConfig& config, std::uint64_t seed) : config_(config) {
  require(config.width >= 1, ErrorKind::Config, "generator: width must be positive");
  const std::size_t w = config.width;
  const std::size_t q = config.q;
  seq_.emplace<SelfOnn1d<float>>(SelfOnnConfig{1, w, 5, q, 2});
  add_norm(seq_, w);
  seq_.emplace<SelfOnn1d<float>>(SelfOnnConfig{w, 2 * w, 5, q, 2});
  add_norm(seq_, 2 * w);
  for (std::size_t b = 0; b < config.residual_blocks; ++b) {
    auto body = std::make_unique<Sequential<float>>();
    body->emplace<SelfOnn1d<float>>(SelfOnnConfig{2 * w, 2 * w, 3, q});
    body->emplace<BatchNorm1d<float>>(BatchNormConfig{2 * w});
    seq_.emplace<Residual<float>>(std::move(body));
    seq_.emplace<Tanh<float>>();
  }
  seq_.emplace<Upsample1d<float>>(2);
  seq_.emplace<SelfOnn1d<float>>(SelfOnnConfig{2 * w, w, 3, q});
  add_norm(seq_, w);
  seq_.emplace<Upsample1d<float>>(2);
  seq_.emplace<SelfOnn1d<float>>(SelfOnnConfig{w, w, 3, q});
  add_norm(seq_, w);
  seq_.emplace<SelfOnn1d<float>>(SelfOnnConfig{w, 1, 7, q});
  seq_.emplace<Tanh<float>>();
  seq_.emplace<Affine<float>>(0.5f, 0.5f);
  initialize_all(*this, seed);
}

Batch<float> GeneratorNet::forward(const Batch<float>& input, Pass& pass) {
  check_batch_shape(input, 1, "GeneratorNet");
  for (const auto& x : input) {
    if (x.length() % 4 != 0) {
      throw Error(ErrorKind::Shape, fmt::format("GeneratorNet: input length {} is not a multiple of 4", x.length()));
    }
  }
  return seq_.forward(input, pass);
}

Batch<float> GeneratorNet::backward(const Batch<float>& grad_output, Pass& pass) {
  return seq_.backward(grad_output, pass);
}

DiscriminatorNet::DiscriminatorNet(const DiscriminatorConfig& config, std::uint64_t seed) {
  if (config.widths.size() != 5) {
    throw ShapeError("discriminator widths", 5, config.widths.size(), "DiscriminatorNet");
  }
  std::size_t in = 1;
  for (std::size_t w : config.widths) {
    seq_.emplace<SelfOnn1d<float>>(SelfOnnConfig{in, w, 4, config.q, 2, std::size_t{1}});
    seq_.emplace<Tanh<float>>();
    in = w;
  }
  seq_.emplace<SelfOnn1d<float>>(SelfOnnConfig{in, 1, 4, config.q, 2, std::size_t{1}});
  initialize_all(*this, seed);
}

Batch<float> DiscriminatorNet::forward(const Batch<float>& input, Pass& pass) {
  check_batch_shape(input, 1, "DiscriminatorNet");
  return seq_.forward(input, pass);
}

Batch<float> DiscriminatorNet::backward(const Batch<float>& grad_output, Pass& pass) {
  return seq_.backward(grad_output, pass);
}

double adversarial_loss(const Batch<float>& scores, bool target_real, Batch<float>* grad) {
  const double target = target_real ? 1.0 : 0.0;
  std::size_t count = 0;
  for (const auto& s : scores) count += s.size();
  if (grad) *grad = zeros_like(scores);
  if (count == 0) return 0.0;
  double sum = 0.0;
  for (std::size_t b = 0; b < scores.size(); ++b) {
    const auto v = scores[b].values();
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double d = static_cast<double>(v[i]) - target;
      sum += d * d;
      if (grad) (*grad)[b].values()[i] = static_cast<float>(2.0 * d / static_cast<double>(count));
    }
  }
  return sum / static_cast<double>(count);
}

double mean_abs_error(const Batch<float>& a, const Batch<float>& b, Batch<float>* grad) {
  if (a.size() != b.size()) throw ShapeError("batch size", a.size(), b.size(), "mean_abs_error");
  std::size_t count = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!a[i].same_shape(b[i])) throw ShapeError("element count", a[i].size(), b[i].size(), "mean_abs_error");
    count += a[i].size();
  }
  if (grad) *grad = zeros_like(a);
  if (count == 0) return 0.0;
  const double n = static_cast<double>(count);
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto va = a[i].values();
    const auto vb = b[i].values();
    for (std::size_t j = 0; j < va.size(); ++j) {
      const double d = static_cast<double>(va[j]) - static_cast<double>(vb[j]);
      sum += std::abs(d);
      if (grad) (*grad)[i].values()[j] = static_cast<float>((d > 0 ? 1.0 : d < 0 ? -1.0 : 0.0) / n);
    }
  }
  return sum / n;
}

double cycle_loss(const Batch<float>& x, const Batch<float>& c, Module<float>& g_x2c, Module<float>& g_c2x) {
  return mean_abs_error(run(g_c2x, run(g_x2c, x)), x) + mean_abs_error(run(g_x2c, run(g_c2x, c)), c);
}

double identity_loss(const Batch<float>& x, const Batch<float>& c, Module<float>& g_x2c, Module<float>& g_c2x) {
  return mean_abs_error(run(g_x2c, c), c) + mean_abs_error(run(g_c2x, x), x);
}

double total_loss(const LossComponents& parts, double lambda_cyc, double beta_ide) {
  return parts.adv1 + parts.adv2 + lambda_cyc * parts.cycle + beta_ide * parts.identity;
}

Batch<float> ReplayBuffer::query(const Batch<float>& fakes, std::mt19937_64& rng) {
  if (capacity_ == 0) return fakes;
  Batch<float> out;
  out.reserve(fakes.size());
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  for (const auto& f : fakes) {
    if (stored_.size() < capacity_) {
      stored_.push_back(f);
      out.push_back(f);
      continue;
    }
    if (coin(rng) < 0.5) {
      const auto i = std::uniform_int_distribution<std::size_t>(0, capacity_ - 1)(rng);
      out.push_back(stored_[i]);
      stored_[i] = f;
    } else {
      out.push_back(f);
    }
  }
  return out;
}

CycleGanState::CycleGanState(const CycleGanConfig& cfg)
    : config(cfg),
      g_x2c(cfg.generator, cfg.seed * 4 + 1),
      g_c2x(cfg.generator, cfg.seed * 4 + 2),
      d_c(cfg.discriminator, cfg.seed * 4 + 3),
      d_x(cfg.discriminator, cfg.seed * 4 + 4),
      opt_g_x2c(Adam{cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2}),
      opt_g_c2x(Adam{cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2}),
      opt_d_c(Adam{cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2}),
      opt_d_x(Adam{cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2}),
      replay_c(cfg.replay_size),
      replay_x(cfg.replay_size),
      rng(cfg.seed) {
  require(cfg.lambda_cyc >= 0 && cfg.beta_ide >= 0, ErrorKind::Config, "cyclegan: loss weights must be >= 0");
  require(cfg.batch_size >= 2, ErrorKind::Config, "cyclegan: batch size must be >= 2");
}

std::vector<CheckpointSection> CycleGanState::sections() {
  return {{"g_x2c", &g_x2c}, {"g_c2x", &g_c2x}, {"d_c", &d_c}, {"d_x", &d_x}};
}

std::string GanLog::csv() const {
  std::string out = "epoch,adversarial,cycle,identity,total,disc_c,disc_x\n";
  for (const auto& e : epochs) {
    out += fmt::format("{},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f}\n", e.epoch, e.adversarial, e.cycle, e.identity,
                       e.total, e.disc_c, e.disc_x);
  }
  return out;
}

GanLog train_cyclegan(const std::vector<sig::Segment>& corrupted, const std::vector<sig::Segment>& clean,
                      CycleGanState& state) {
  if (corrupted.empty() || clean.empty()) {
    throw Error(ErrorKind::Data, fmt::format("cyclegan: both domains must be non-empty (corrupted {}, clean {})",
                                             corrupted.size(), clean.size()));
  }
  const auto& cfg = state.config;
  const std::size_t batch = cfg.batch_size;
  const std::size_t iterations = (std::max(corrupted.size(), clean.size()) + batch - 1) / batch;
  const auto lambda = static_cast<float>(cfg.lambda_cyc);
  const auto beta = static_cast<float>(cfg.beta_ide);

  std::vector<std::size_t> order_x(corrupted.size());
  std::vector<std::size_t> order_c(clean.size());
  std::iota(order_x.begin(), order_x.end(), 0);
  std::iota(order_c.begin(), order_c.end(), 0);

  GanLog log;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order_x.begin(), order_x.end(), state.rng);
    std::shuffle(order_c.begin(), order_c.end(), state.rng);
    GanEpochStats stats;
    stats.epoch = epoch;

    for (std::size_t it = 0; it < iterations; ++it) {
      const Batch<float> x = to_batch(corrupted, order_x, it * batch, batch);
      const Batch<float> c = to_batch(clean, order_c, it * batch, batch);

      // Generators.
      state.g_x2c.zero_grad();
      state.g_c2x.zero_grad();
      Pass p_fake_c(Mode::Train), p_fake_x(Mode::Train), p_rec_x(Mode::Train), p_rec_c(Mode::Train),
          p_id_c(Mode::Train), p_id_x(Mode::Train), p_dc(Mode::Train), p_dx(Mode::Train);
      const auto fake_c = state.g_x2c.forward(x, p_fake_c);
      const auto fake_x = state.g_c2x.forward(c, p_fake_x);
      const auto rec_x = state.g_c2x.forward(fake_c, p_rec_x);
      const auto rec_c = state.g_x2c.forward(fake_x, p_rec_c);
      const auto id_c = state.g_x2c.forward(c, p_id_c);
      const auto id_x = state.g_c2x.forward(x, p_id_x);
      const auto score_c = state.d_c.forward(fake_c, p_dc);
      const auto score_x = state.d_x.forward(fake_x, p_dx);

      LossComponents parts;
      Batch<float> g_score_c, g_score_x, g_rec_x, g_rec_c, g_id_c, g_id_x;
      parts.adv1 = adversarial_loss(score_c, true, &g_score_c);
      parts.adv2 = adversarial_loss(score_x, true, &g_score_x);
      parts.cycle = mean_abs_error(rec_x, x, &g_rec_x) + mean_abs_error(rec_c, c, &g_rec_c);
      parts.identity = mean_abs_error(id_c, c, &g_id_c) + mean_abs_error(id_x, x, &g_id_x);

      auto grad_fake_c = state.d_c.backward(g_score_c, p_dc);
      auto grad_fake_x = state.d_x.backward(g_score_x, p_dx);
      grad_fake_c = add(grad_fake_c, state.g_c2x.backward(scaled(g_rec_x, lambda), p_rec_x));
      grad_fake_x = add(grad_fake_x, state.g_x2c.backward(scaled(g_rec_c, lambda), p_rec_c));
      state.g_x2c.backward(scaled(g_id_c, beta), p_id_c);
      state.g_c2x.backward(scaled(g_id_x, beta), p_id_x);
      state.g_x2c.backward(grad_fake_c, p_fake_c);
      state.g_c2x.backward(grad_fake_x, p_fake_x);
      update(state.g_x2c, state.opt_g_x2c, cfg.clip_norm);
      update(state.g_c2x, state.opt_g_c2x, cfg.clip_norm);
      ++state.generator_updates;

      // Discriminators, each on real samples and replayed fakes, halved.
      auto train_disc = [&](DiscriminatorNet& d, OptimizerState& opt, ReplayBuffer& replay, const Batch<float>& real,
                            const Batch<float>& fake) {
        d.zero_grad();
        const auto pool = replay.query(fake, state.rng);
        Pass p_real(Mode::Train), p_pool(Mode::Train);
        Batch<float> g_real, g_pool;
        const double loss = 0.5 * (adversarial_loss(d.forward(real, p_real), true, &g_real) +
                                   adversarial_loss(d.forward(pool, p_pool), false, &g_pool));
        d.backward(scaled(g_real, 0.5f), p_real);
        d.backward(scaled(g_pool, 0.5f), p_pool);
        update(d, opt, cfg.clip_norm);
        return loss;
      };
      // The generator step left adversarial gradients in the discriminators;
      // train_disc clears them first.
      stats.disc_c += train_disc(state.d_c, state.opt_d_c, state.replay_c, c, fake_c);
      stats.disc_x += train_disc(state.d_x, state.opt_d_x, state.replay_x, x, fake_x);
      ++state.discriminator_updates;

      stats.adversarial += parts.adv1 + parts.adv2;
      stats.cycle += parts.cycle;
      stats.identity += parts.identity;
      stats.total += total_loss(parts, cfg.lambda_cyc, cfg.beta_ide);
    }
    const auto n = static_cast<double>(iterations);
    stats.adversarial /= n;
    stats.cycle /= n;
    stats.identity /= n;
    stats.total /= n;
    stats.disc_c /= n;
    stats.disc_x /= n;
    log.epochs.push_back(stats);
  }
  return log;
}

sig::Segment restore(const sig::Segment& segment, CycleGanState& state, int passes) {
  if (passes != 1 && passes != 2) throw Error(ErrorKind::Argument, fmt::format("restore: passes must be 1 or 2, got {}", passes));
  if (segment.quality != sig::Quality::Acceptable) {
    throw Error(ErrorKind::Data, fmt::format("restore: segment {}#{} is {}, only Acceptable segments are restored",
                                             segment.source.subject_id, segment.source.window,
                                             sig::to_string(segment.quality)));
  }
  Batch<float> x{Tensor<float>(1, segment.samples.size(),
                               std::vector<float>(segment.samples.begin(), segment.samples.end()))};
  for (int p = 0; p < passes; ++p) {
    x = run(state.g_x2c, x);
    for (auto& v : x[0].values()) v = std::clamp(v, 0.0f, 1.0f);
  }
  sig::Segment out = segment;
  out.samples.assign(x[0].values().begin(), x[0].values().end());
  return out;
}

DomainSplit entropy_domains(const std::vector<sig::Segment>& segments) {
  std::vector<std::pair<double, std::size_t>> ranked;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    if (segments[i].quality != sig::Quality::Acceptable) continue;
    double value = std::numeric_limits<double>::infinity();
    try {
      value = entropy::sampen(segments[i].samples);
    } catch (const Error&) {
      // Constant or too-short segment.
    }
    ranked.emplace_back(value, i);
  }
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  const std::size_t n = ranked.size();
  const std::size_t quarter = std::min((n + 3) / 4, n / 2);
  DomainSplit split;
  for (std::size_t i = 0; i < quarter; ++i) {
    split.clean.push_back(ranked[i].second);
    split.corrupted.push_back(ranked[n - 1 - i].second);
  }
  std::sort(split.clean.begin(), split.clean.end());
  std::sort(split.corrupted.begin(), split.corrupted.end());
  return split;
}

}  // namespace opnn::restorer
