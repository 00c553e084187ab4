#include <doctest.h>

#include <cmath>
#include <random>

#include "opnn/entropy.hpp"
#include "opnn/restorer.hpp"
#include "opnn/synth.hpp"

using namespace opnn;
using namespace opnn::restorer;

namespace {

/// y = x + offset; a stand-in generator with a known output.
class Shift final : public Module<float> {
 public:
  explicit Shift(float offset = 0.0f) : offset_(offset) {}
  Batch<float> forward(const Batch<float>& input, Pass&) override {
    Batch<float> out = input;
    for (auto& t : out) {
      for (auto& v : t.values()) v += offset_;
    }
    return out;
  }
  Batch<float> backward(const Batch<float>& g, Pass&) override { return g; }
  std::string name() const override { return "Shift"; }

 private:
  float offset_;
};

Batch<float> random_signals(std::mt19937_64& rng, std::size_t n, std::size_t len = 64) {
  std::uniform_real_distribution<float> u(0, 1);
  Batch<float> out;
  for (std::size_t i = 0; i < n; ++i) {
    Tensor<float> t(1, len);
    for (auto& v : t.values()) v = u(rng);
    out.push_back(std::move(t));
  }
  return out;
}

CycleGanConfig tiny_config() {
  CycleGanConfig cfg;
  cfg.epochs = 1;
  cfg.batch_size = 4;
  cfg.generator.width = 2;
  cfg.generator.residual_blocks = 1;
  cfg.discriminator.widths = {2, 2, 2, 2, 2};
  cfg.seed = 3;
  return cfg;
}

std::vector<sig::Segment> tagged(std::vector<sig::Segment> s) {
  for (auto& x : s) x.quality = sig::Quality::Acceptable;
  return s;
}

}  // namespace

TEST_SUITE("restorer") {
  TEST_CASE("adversarial loss examples") {
    const Batch<float> ones{Tensor<float>(1, 5, 1.0f)};
    const Batch<float> zeros{Tensor<float>(1, 5, 0.0f)};
    const Batch<float> halves{Tensor<float>(1, 2, 0.5f)};
    CHECK(adversarial_loss(ones, true) == 0.0);
    CHECK(adversarial_loss(zeros, true) == 1.0);
    CHECK(adversarial_loss(halves, false) == 0.25);
    Batch<float> grad;
    adversarial_loss(halves, false, &grad);
    CHECK(grad[0](0, 0) == doctest::Approx(0.5));
  }

  TEST_CASE("cycle and identity loss examples") {
    std::mt19937_64 rng(1);
    const auto x = random_signals(rng, 3);
    const auto c = random_signals(rng, 3);
    Shift id, plus(0.1f), minus(-0.1f), half(0.2f);
    CHECK(cycle_loss(x, c, id, id) == 0.0);
    CHECK(identity_loss(x, c, id, id) == 0.0);
    // Round trip x -> c -> x shifts by +0.1; the other path is exact.
    Shift zero;
    CHECK(cycle_loss(x, c, plus, zero) == doctest::Approx(0.2).epsilon(1e-6));
    CHECK(cycle_loss(x, c, plus, minus) == doctest::Approx(0.0).epsilon(1e-6));
    CHECK(identity_loss(x, c, half, id) == doctest::Approx(0.2).epsilon(1e-6));
    // Swapping the domains and the generators leaves the value unchanged.
    Shift a(0.05f), b(-0.3f);
    CHECK(cycle_loss(x, c, a, b) == doctest::Approx(cycle_loss(c, x, b, a)).epsilon(1e-12));
    CHECK(identity_loss(x, c, a, b) >= 0.0);
  }

  TEST_CASE("total loss arithmetic") {
    CHECK(total_loss({1, 1, 1, 1}, 0.5, 0.25) == 2.75);
    CHECK(total_loss({0, 0, 0, 0}, 0.5, 0.25) == 0.0);
    CHECK(total_loss({0.3, 0.4, 9, 9}, 0.0, 0.0) == doctest::Approx(0.7).epsilon(1e-15));
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0, 3);
    for (int i = 0; i < 100; ++i) {
      const LossComponents p{u(rng), u(rng), u(rng), u(rng)};
      const double l = u(rng), b = u(rng);
      CHECK(std::abs(total_loss(p, l, b) - (p.adv1 + p.adv2 + l * p.cycle + b * p.identity)) < 1e-12);
    }
  }

  TEST_CASE("mean absolute error shapes") {
    CHECK_THROWS_AS(mean_abs_error({Tensor<float>(1, 3)}, {Tensor<float>(1, 4)}), ShapeError);
    CHECK_THROWS_AS(mean_abs_error({Tensor<float>(1, 3)}, {}), ShapeError);
  }

  TEST_CASE("generator and discriminator contracts") {
    GeneratorNet g(GeneratorConfig{3, 2, 2}, 1);
    DiscriminatorNet d(DiscriminatorConfig{}, 2);
    std::mt19937_64 rng(3);
    const auto x = random_signals(rng, 2, 2500);
    Pass pg(Mode::Eval, false);
    const auto y = g.forward(x, pg);
    CHECK(y[0].length() == 2500);
    for (float v : y[1].values()) {
      CHECK(v >= 0.0f);
      CHECK(v <= 1.0f);
    }
    Pass pd(Mode::Eval, false);
    const auto s = d.forward(x, pd);
    CHECK(s[0].channels() == 1);
    CHECK(s[0].length() == 39);
    CHECK(s[0].all_finite());
    Pass bad(Mode::Eval, false);
    CHECK_THROWS_AS(g.forward({Tensor<float>(1, 2502)}, bad), Error);
  }

  TEST_CASE("replay buffer") {
    ReplayBuffer buffer(2);
    std::mt19937_64 rng(0);
    const Batch<float> first{Tensor<float>(1, 1, 1.0f), Tensor<float>(1, 1, 2.0f)};
    CHECK(buffer.query(first, rng) == first);
    CHECK(buffer.size() == 2);
    // Once full, each fake is swapped for a stored one with probability 1/2.
    std::size_t swapped = 0;
    for (int i = 0; i < 200; ++i) {
      const float v = 10.0f + static_cast<float>(i);
      const auto out = buffer.query({Tensor<float>(1, 1, v)}, rng);
      swapped += out[0](0, 0) != v;
    }
    CHECK(buffer.size() == 2);
    CHECK(swapped > 60);
    CHECK(swapped < 140);
  }

  TEST_CASE("training bookkeeping and determinism") {
    auto corpus = synth::restoration_corpus(16, 4);
    auto cfg = tiny_config();
    cfg.batch_size = 16;
    CycleGanState state(cfg);
    const auto log = train_cyclegan(corpus.corrupted, corpus.clean, state);
    CHECK(state.generator_updates == 1);
    CHECK(state.discriminator_updates == 1);
    CHECK(log.epochs.size() == 1);
    CHECK(log.csv().rfind("epoch,adversarial,cycle,identity,total,disc_c,disc_x\n1,", 0) == 0);

    auto small = synth::restoration_corpus(6, 5);
    auto c2 = tiny_config();
    c2.epochs = 2;
    CycleGanState a(c2), b(c2);
    CHECK(train_cyclegan(small.corrupted, small.clean, a).csv() ==
          train_cyclegan(small.corrupted, small.clean, b).csv());
    CHECK(a.generator_updates == 4);

    CHECK_THROWS_AS(train_cyclegan({}, small.clean, a), Error);
  }

  TEST_CASE("restore contracts") {
    auto cfg = tiny_config();
    CycleGanState state(cfg);
    auto segs = tagged(synth::restoration_corpus(3, 6).corrupted);
    for (const auto& s : segs) {
      const auto one = restore(s, state, 1);
      const auto two = restore(s, state, 2);
      CHECK(one.samples.size() == 2500);
      CHECK(two.samples == restore(one, state, 1).samples);
      for (double v : two.samples) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
      }
      CHECK(one.source == s.source);
    }
    auto bad = segs[0];
    bad.quality = sig::Quality::Corrupted;
    CHECK_THROWS_AS(restore(bad, state, 1), Error);
    CHECK_THROWS_AS(restore(segs[0], state, 3), Error);
  }

  TEST_CASE("checkpoint sections") {
    CycleGanState a(tiny_config());
    auto other = tiny_config();
    other.seed = 99;
    CycleGanState b(other);
    decode_checkpoint(encode_checkpoint(a.sections()), b.sections());
    auto seg = tagged(synth::restoration_corpus(1, 7).clean)[0];
    CHECK(restore(seg, a, 1).samples == restore(seg, b, 1).samples);
    const auto names = a.sections();
    CHECK(names[0].name == "g_x2c");
    CHECK(names[3].name == "d_x");
  }

  TEST_CASE("entropy domains rank by sample entropy") {
    auto corpus = synth::restoration_corpus(4, 8);
    std::vector<sig::Segment> all;
    for (auto& s : corpus.clean) all.push_back(s);
    for (auto& s : corpus.corrupted) all.push_back(s);
    all.push_back(all[0]);
    all.back().quality = sig::Quality::Corrupted;
    const auto split = entropy_domains(all);
    CHECK(split.clean.size() == 2);
    CHECK(split.corrupted.size() == 2);
    double worst_clean = 0, best_bad = 1e9;
    for (auto i : split.clean) worst_clean = std::max(worst_clean, entropy::sampen(all[i].samples));
    for (auto i : split.corrupted) best_bad = std::min(best_bad, entropy::sampen(all[i].samples));
    CHECK(worst_clean <= best_bad);
    for (auto i : split.corrupted) CHECK(i != 8);

    CHECK(entropy_domains({}).clean.empty());
  }
}
