#include <doctest.h>

#include <cmath>
#include <numeric>
#include <set>

#include "opnn/afnet.hpp"
#include "opnn/synth.hpp"

using namespace opnn;
using namespace opnn::afnet;

namespace {

std::vector<float> flat(Module<float>& m) {
  std::vector<float> out;
  for (auto* p : m.parameters()) out.insert(out.end(), p->value.begin(), p->value.end());
  return out;
}

std::vector<Example> small_quality_set(std::size_t n, std::uint64_t seed) {
  return quality_examples(synth::quality_corpus(n, seed));
}

}  // namespace

TEST_SUITE("afnet") {
  TEST_CASE("parameter count scales with q and matches the model") {
    for (std::size_t width : {4, 8, 16}) {
      const auto c1 = count_parameters(ModelConfig{1, width});
      const auto c3 = count_parameters(ModelConfig{3, width});
      CHECK(c3.nodal_weights == 3 * c1.nodal_weights);
      CHECK(c3.biases == c1.biases);
      CHECK(c3.batchnorm == c1.batchnorm);
      auto model = build_model(3, width, 0);
      CHECK(count_parameters(model).total() == c3.total());
      CHECK(model.trainable_count() == c3.total());
    }
    CHECK(count_parameters(ModelConfig{}).total() < 100000);
    CHECK(count_parameters(ModelConfig{7, 16}).total() < 100000);
  }

  TEST_CASE("configuration checks") {
    CHECK_THROWS_AS(build_model(2, 16, 0), Error);
    CHECK_THROWS_AS(build_model(3, 3, 0), Error);
  }

  TEST_CASE("same seed, same parameters; two finite logits") {
    auto a = build_model(3, 8, 42);
    auto b = build_model(3, 8, 42);
    auto c = build_model(3, 8, 43);
    CHECK(flat(a) == flat(b));
    CHECK(flat(a) != flat(c));
    Tensor<float> x(1, 2500, 0.5f);
    Pass pass(Mode::Eval, false);
    const auto y = a.forward({x}, pass);
    REQUIRE(y.size() == 1);
    CHECK(y[0].size() == 2);
    CHECK(y[0].all_finite());
  }

  TEST_CASE("property: blocks preserve shape") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<float> u(-1, 1);
    for (int trial = 0; trial < 10; ++trial) {
      const std::size_t channels = 4 + rng() % 4;
      Block block(channels, 1 + rng() % 4, 1 + 2 * (rng() % 4));
      block.initialize(rng);
      Tensor<float> x(channels, 10 + rng() % 40);
      for (auto& v : x.values()) v = u(rng);
      Pass pass(Mode::Train, false);
      const auto y = block.forward({x, x}, pass);
      CHECK(y[0].same_shape(x));
      CHECK(y[1].all_finite());
    }
  }

  TEST_CASE("q=1 model layers are plain convolutions") {
    auto model = build_model(1, 4, 3);
    for (auto* g : model.generative_layers()) CHECK(g->q() == 1);
  }

  TEST_CASE("softmax prediction arithmetic") {
    CHECK(softmax_prediction(2.0, 2.0).score == 0.5);
    CHECK(softmax_prediction(0.0, std::log(3.0)).score == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(softmax_prediction(0.0, std::log(3.0)).label == 1);
    CHECK(softmax_prediction(1000.0, -1000.0).score == 0.0);
    CHECK(softmax_prediction(-1000.0, 1000.0).score == 1.0);
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-20, 20);
    for (int trial = 0; trial < 100; ++trial) {
      const double z0 = u(rng), z1 = u(rng), c = u(rng);
      const auto a = softmax_prediction(z0, z1);
      const auto b = softmax_prediction(z0 + c, z1 + c);
      CHECK(a.label == b.label);
      CHECK(a.score == doctest::Approx(b.score).epsilon(1e-12));
    }
  }

  TEST_CASE("cross-entropy value and gradient") {
    Batch<float> logits{Tensor<float>(2, 1, std::vector<float>{0.0f, 0.0f}),
                        Tensor<float>(2, 1, std::vector<float>{0.0f, std::log(3.0f)})};
    Batch<float> grad;
    const double loss = cross_entropy(logits, {0, 1}, &grad);
    CHECK(loss == doctest::Approx((std::log(2.0) + std::log(4.0 / 3.0)) / 2).epsilon(1e-6));
    CHECK(grad[0](0, 0) == doctest::Approx((0.5 - 1.0) / 2));
    CHECK(grad[1](1, 0) == doctest::Approx((0.75 - 1.0) / 2));
  }

  TEST_CASE("predict is pure and checks the length") {
    auto model = build_model(3, 4, 0);
    Tensor<float> x(1, 2500);
    for (std::size_t i = 0; i < 2500; ++i) x(0, i) = static_cast<float>(std::sin(i * 0.05));
    const auto a = predict(model, x);
    const auto b = predict(model, x);
    CHECK(a.score == b.score);
    CHECK(a.score >= 0.0);
    CHECK(a.score <= 1.0);
    CHECK_THROWS_AS(predict(model, Tensor<float>(1, 2000)), ShapeError);
  }

  TEST_CASE("quality gate on degenerate and empty input") {
    auto model = build_model(3, 4, 0);
    std::vector<sig::Segment> none;
    const auto empty = quality_gate(model, none);
    CHECK(empty.acceptable.empty());
    CHECK(empty.corrupted.empty());

    std::vector<sig::Segment> flat(3);
    for (auto& s : flat) s.samples.assign(2500, 0.5);
    const auto first = quality_gate(model, flat);
    CHECK(first.acceptable.size() + first.corrupted.size() == 3);
    for (const auto& s : flat) CHECK(s.quality != sig::Quality::Unassessed);
    const auto second = quality_gate(model, flat);
    CHECK(first.acceptable == second.acceptable);
  }

  TEST_CASE("stratified folds") {
    std::vector<int> labels(100);
    for (std::size_t i = 0; i < 100; ++i) labels[i] = i < 60 ? 0 : 1;
    const auto folds = stratified_folds(labels, 5, 3);
    REQUIRE(folds.size() == 5);
    std::set<std::size_t> seen;
    for (const auto& f : folds) {
      CHECK(f.size() == 20);
      std::size_t zeros = 0;
      for (auto i : f) {
        CHECK(seen.insert(i).second);
        zeros += labels[i] == 0;
      }
      CHECK(std::abs(static_cast<long>(zeros) - 12) <= 1);
    }
    CHECK(seen.size() == 100);
    CHECK(stratified_folds(labels, 5, 3) == folds);
    CHECK_THROWS_AS(stratified_folds({0, 0, 0, 1}, 2, 0), Error);
  }

  TEST_CASE("property: stratification on random label sets") {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 50; ++trial) {
      const std::size_t k = 2 + rng() % 5;
      const std::size_t n = k * 2 + rng() % 200;
      std::vector<int> labels(n);
      for (auto& l : labels) l = static_cast<int>(rng() % 3 == 0);
      const std::size_t pos = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
      if (pos < k || n - pos < k) continue;
      const auto folds = stratified_folds(labels, k, trial);
      std::size_t total = 0;
      for (const auto& f : folds) {
        total += f.size();
        std::size_t p = 0;
        for (auto i : f) p += labels[i] == 1;
        const double expect = static_cast<double>(pos) / static_cast<double>(k);
        CHECK(std::abs(static_cast<double>(p) - expect) <= 1.0);
      }
      CHECK(total == n);
    }
  }

  TEST_CASE("training bookkeeping") {
    const auto data = small_quality_set(32, 5);
    auto model = build_model(3, 4, 0);
    const auto before = flat(model);
    TrainConfig zero;
    zero.epochs = 0;
    CHECK(train(model, data, zero).epochs.empty());
    CHECK(flat(model) == before);

    TrainConfig cfg;
    cfg.epochs = 2;
    auto m1 = build_model(3, 4, 0);
    auto m2 = build_model(3, 4, 0);
    const auto l1 = train(m1, data, cfg);
    const auto l2 = train(m2, data, cfg);
    CHECK(l1.csv() == l2.csv());
    CHECK(flat(m1) == flat(m2));
    CHECK(l1.csv().rfind("epoch,loss,accuracy\n1,", 0) == 0);

    std::vector<Example> one_class;
    for (const auto& e : data) {
      if (e.label == 0) one_class.push_back(e);
    }
    CHECK_THROWS_AS(train(m1, one_class, cfg), Error);
  }

  TEST_CASE("learns an easy separable task") {
    const auto data = small_quality_set(256, 9);
    auto model = build_model(3, 4, 1);
    TrainConfig cfg;
    cfg.epochs = 4;
    const auto log = train(model, data, cfg);
    CHECK(log.epochs.back().accuracy >= 99.0);
  }

  TEST_CASE("smoothed training loss does not increase") {
    const auto data = rhythm_examples(synth::rhythm_corpus(256, 9));
    for (std::uint64_t seed : {1, 2}) {
      auto model = build_model(3, 4, seed);
      TrainConfig cfg;
      cfg.epochs = 8;
      const auto log = train(model, data, cfg);
      std::vector<double> smooth;
      for (std::size_t i = 0; i + 2 < log.epochs.size(); ++i) {
        smooth.push_back((log.epochs[i].loss + log.epochs[i + 1].loss + log.epochs[i + 2].loss) / 3);
      }
      CAPTURE(log.csv());
      for (std::size_t i = 1; i < smooth.size(); ++i) CHECK(smooth[i] <= smooth[i - 1]);
    }
  }

  TEST_CASE("k-fold evaluation covers every example once") {
    const auto data = small_quality_set(20, 2);
    TrainConfig cfg;
    cfg.epochs = 1;
    const auto folds = kfold_evaluate(data, 4, ModelConfig{3, 4}, cfg);
    REQUIRE(folds.size() == 4);
    std::size_t total = 0;
    for (const auto& f : folds) {
      total += f.confusion.total();
      CHECK(f.scores.size() == f.labels.size());
    }
    CHECK(total == data.size());
  }
}
