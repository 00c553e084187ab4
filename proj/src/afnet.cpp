#include "opnn/afnet.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace opnn::afnet {

namespace {


SelfOnn1d<float>& add_gnl(Sequential<float>& seq, std::vector<SelfOnn1d<float>*>& list, const SelfOnnConfig& c) {
  auto& layer = seq.emplace<SelfOnn1d<float>>(c);
  list.push_back(&layer);
  return layer;
}

void add_norm(Sequential<float>& seq, std::size_t channels) {
  seq.emplace<BatchNorm1d<float>>(BatchNormConfig{channels});
  seq.emplace<Tanh<float>>();
}

void check_config(const ModelConfig& c) {
  if (c.q != 1 && c.q != 3 && c.q != 5 && c.q != 7) {
    throw Error(ErrorKind::Config, fmt::format("afnet: q must be one of 1, 3, 5, 7 (got {})", c.q));
  }
  if (c.width < 4) throw Error(ErrorKind::Config, fmt::format("afnet: width must be >= 4 (got {})", c.width));
  require(c.expansion >= 1 && c.hidden >= 1 && c.pooled_length >= 1 && c.stem_kernel >= 1 && c.stem_stride >= 1,
          ErrorKind::Config, "afnet: expansion, hidden, pooled length and stem geometry must be positive");
}

std::vector<Example> to_examples(const std::vector<sig::Segment>& segments, auto label_of) {
  std::vector<Example> out;
  for (const auto& s : segments) {
    const int label = label_of(s);
    if (label < 0) continue;
    out.push_back(Example{segment_tensor(s.samples), label});
  }
  return out;
}

}  // namespace

Tensor<float> segment_tensor(std::span<const double> samples) {
  return Tensor<float>(1, samples.size(), std::vector<float>(samples.begin(), samples.end()));
}

Block::Block(std::size_t channels, std::size_t expansion, std::size_t q) {
  const std::size_t wide = channels * expansion;
  auto body = std::make_unique<Sequential<float>>();
  body->emplace<SelfOnn1d<float>>(SelfOnnConfig{channels, wide, 1, q});
  add_norm(*body, wide);
  body->emplace<SelfOnn1d<float>>(SelfOnnConfig{wide, wide, 3, q, 1, std::nullopt, true});
  add_norm(*body, wide);
  body->emplace<SelfOnn1d<float>>(SelfOnnConfig{wide, channels, 1, q});
  add_norm(*body, channels);
  residual_ = &seq_.emplace<Residual<float>>(std::move(body));
  seq_.emplace<Tanh<float>>();
}

void Block::initialize(std::mt19937_64& rng) {
  for (std::size_t i = 0; i < body().size(); ++i) {
    if (auto* g = dynamic_cast<SelfOnn1d<float>*>(&body().at(i))) g->initialize(rng);
  }
}

Batch<float> Block::forward(const Batch<float>& input, Pass& pass) { return seq_.forward(input, pass); }
Batch<float> Block::backward(const Batch<float>& grad_output, Pass& pass) { return seq_.backward(grad_output, pass); }

Model::Model(const ModelConfig& config) : config_(config) {
  check_config(config);
  const std::size_t w = config.width;
  const std::size_t q = config.q;
  add_gnl(seq_, gnls_, SelfOnnConfig{1, w, config.stem_kernel, q, config.stem_stride, std::size_t{0}});
  add_norm(seq_, w);
  for (std::size_t b = 0; b < config.blocks; ++b) {
    auto& block = seq_.emplace<Block>(w, config.expansion, q);
    blocks_.push_back(&block);
    for (std::size_t i = 0; i < block.body().size(); ++i) {
      if (auto* g = dynamic_cast<SelfOnn1d<float>*>(&block.body().at(i))) gnls_.push_back(g);
    }
  }
  seq_.emplace<AdaptiveAvgPool1d<float>>(config.pooled_length);
  seq_.emplace<Flatten<float>>();
  add_gnl(seq_, gnls_, SelfOnnConfig{w * config.pooled_length, config.hidden, 1, q});
  add_norm(seq_, config.hidden);
  add_gnl(seq_, gnls_, SelfOnnConfig{config.hidden, 2, 1, q});

  std::mt19937_64 rng(config.seed);
  for (auto* g : gnls_) g->initialize(rng);
}

Batch<float> Model::forward(const Batch<float>& input, Pass& pass) {
  check_batch_shape(input, 1, "SelfAfnet");
  return seq_.forward(input, pass);
}

Batch<float> Model::backward(const Batch<float>& grad_output, Pass& pass) { return seq_.backward(grad_output, pass); }

Model build_model(std::size_t q, std::size_t width, std::uint64_t seed) {
  ModelConfig c;
  c.q = q;
  c.width = width;
  c.seed = seed;
  return Model(c);
}

Model build_model(const ModelConfig& config) { return Model(config); }

ParameterCount count_parameters(const ModelConfig& c) {
  check_config(c);
  const std::size_t w = c.width;
  const std::size_t wide = w * c.expansion;
  ParameterCount n;
  auto gnl = [&](std::size_t in_per_group, std::size_t out, std::size_t kernel) {
    n.nodal_weights += out * in_per_group * c.q * kernel;
    n.biases += out;
  };
  gnl(1, w, c.stem_kernel);
  n.batchnorm += 2 * w;
  for (std::size_t b = 0; b < c.blocks; ++b) {
    gnl(w, wide, 1);
    gnl(1, wide, 3);
    gnl(wide, w, 1);
    n.batchnorm += 2 * (wide + wide + w);
  }
  gnl(w * c.pooled_length, c.hidden, 1);
  n.batchnorm += 2 * c.hidden;
  gnl(c.hidden, 2, 1);
  return n;
}

ParameterCount count_parameters(Model& model) {
  ParameterCount n;
  std::vector<LayerRecord<float>> recs;
  model.records(recs);
  for (const auto& r : recs) {
    if (r.tag == LayerTag::SelfOnn) {
      n.nodal_weights += r.blocks[0]->size();
      n.biases += r.blocks[1]->size();
    } else {
      for (auto* p : r.blocks) {
        if (p->trainable) n.batchnorm += p->size();
      }
    }
  }
  return n;
}

std::vector<Example> rhythm_examples(const std::vector<sig::Segment>& segments) {
  return to_examples(segments, [](const sig::Segment& s) {
    if (s.label == sig::Label::AF) return 1;
    if (s.label == sig::Label::NonAF) return 0;
    return -1;
  });
}

std::vector<Example> quality_examples(const std::vector<sig::Segment>& segments) {
  return to_examples(segments, [](const sig::Segment& s) {
    if (s.quality == sig::Quality::Corrupted) return 1;
    if (s.quality == sig::Quality::Acceptable) return 0;
    return -1;
  });
}

std::string TrainLog::csv() const {
  std::string out = "epoch,loss,accuracy\n";
  for (const auto& e : epochs) out += fmt::format("{},{:.6f},{:.4f}\n", e.epoch, e.loss, e.accuracy);
  return out;
}

double cross_entropy(const Batch<float>& logits, const std::vector<int>& labels, Batch<float>* grad) {
  if (logits.size() != labels.size()) throw ShapeError("label count", logits.size(), labels.size(), "cross_entropy");
  check_batch_shape(logits, 2, "cross_entropy");
  if (grad) *grad = zeros_like(logits);
  double total = 0.0;
  const double n = static_cast<double>(logits.size());
  for (std::size_t b = 0; b < logits.size(); ++b) {
    const double z0 = logits[b](0, 0);
    const double z1 = logits[b](1, 0);
    const double top = std::max(z0, z1);
    const double log_norm = top + std::log(std::exp(z0 - top) + std::exp(z1 - top));
    const double p1 = std::exp(z1 - log_norm);
    const double p0 = std::exp(z0 - log_norm);
    total -= labels[b] == 1 ? z1 - log_norm : z0 - log_norm;
    if (grad) {
      (*grad)[b](0, 0) = static_cast<float>((p0 - (labels[b] == 0 ? 1.0 : 0.0)) / n);
      (*grad)[b](1, 0) = static_cast<float>((p1 - (labels[b] == 1 ? 1.0 : 0.0)) / n);
    }
  }
  return total / n;
}

TrainLog train(Model& model, const std::vector<Example>& data, const TrainConfig& config) {
  require(config.batch_size >= 2, ErrorKind::Config, "afnet train: batch size must be >= 2");
  std::size_t positives = 0;
  for (const auto& e : data) positives += e.label == 1;
  if (positives == 0 || positives == data.size()) {
    throw Error(ErrorKind::Data, fmt::format("afnet train: need both classes, got {} of {} positive", positives,
                                             data.size()));
  }

  TrainLog log;
  OptimizerState opt(Sgd{config.learning_rate, config.momentum});
  auto params = model.parameters();
  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t correct = 0;
    std::size_t begin = 0;
    while (begin < order.size()) {
      std::size_t end = std::min(order.size(), begin + config.batch_size);
      if (order.size() - end == 1) ++end;
      Batch<float> x;
      std::vector<int> y;
      for (std::size_t i = begin; i < end; ++i) {
        x.push_back(data[order[i]].input);
        y.push_back(data[order[i]].label);
      }
      Pass pass(Mode::Train);
      model.zero_grad();
      const auto logits = model.forward(x, pass);
      Batch<float> grad;
      const double loss = cross_entropy(logits, y, &grad);
      model.backward(grad, pass);
      optimizer_step<float>(params, opt);

      loss_sum += loss * static_cast<double>(end - begin);
      for (std::size_t b = 0; b < logits.size(); ++b) {
        const int pred = logits[b](1, 0) > logits[b](0, 0) ? 1 : 0;
        correct += pred == y[b];
      }
      begin = end;
    }
    const double n = static_cast<double>(data.size());
    log.epochs.push_back(EpochStats{epoch, loss_sum / n, 100.0 * static_cast<double>(correct) / n});
  }
  return log;
}

Prediction softmax_prediction(double logit0, double logit1) {
  // p1 = 1 / (1 + exp(z0 - z1)), computed without overflow.
  const double d = logit0 - logit1;
  const double score = d >= 0 ? std::exp(-d) / (1.0 + std::exp(-d)) : 1.0 / (1.0 + std::exp(d));
  return Prediction{logit1 > logit0 ? 1 : 0, score};
}

Prediction predict(Model& model, const Tensor<float>& input) {
  if (input.channels() != 1) throw ShapeError("channels", 1, input.channels(), "afnet predict");
  if (input.length() != sig::kSegmentLength) {
    throw ShapeError("segment length", sig::kSegmentLength, input.length(), "afnet predict");
  }
  Pass pass(Mode::Eval, false);
  const auto out = model.forward(Batch<float>{input}, pass);
  return softmax_prediction(out[0](0, 0), out[0](1, 0));
}

std::vector<Prediction> predict(Model& model, const std::vector<Example>& data) {
  std::vector<Prediction> out;
  out.reserve(data.size());
  for (const auto& e : data) out.push_back(predict(model, e.input));
  return out;
}

GatePartition quality_gate(Model& model, std::vector<sig::Segment>& segments) {
  GatePartition part;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto& s = segments[i];
    const auto p = predict(model, segment_tensor(s.samples));
    if (p.score >= 0.5) {
      segments[i].quality = sig::Quality::Corrupted;
      part.corrupted.push_back(i);
    } else {
      segments[i].quality = sig::Quality::Acceptable;
      part.acceptable.push_back(i);
    }
  }
  return part;
}

std::vector<std::vector<std::size_t>> stratified_folds(const std::vector<int>& labels, std::size_t k,
                                                       std::uint64_t seed) {
  require(k >= 2, ErrorKind::Argument, "stratified_folds: k must be >= 2");
  std::vector<int> classes(labels.begin(), labels.end());
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());

  std::mt19937_64 rng(seed);
  std::vector<std::size_t> sequence;
  for (int c : classes) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == c) members.push_back(i);
    }
    if (members.size() < k) {
      throw Error(ErrorKind::Data,
                  fmt::format("stratified_folds: class {} has {} members, fewer than k = {}", c, members.size(), k));
    }
    std::shuffle(members.begin(), members.end(), rng);
    sequence.insert(sequence.end(), members.begin(), members.end());
  }
  // Dealing the class-grouped sequence round-robin keeps every class within
  // one member of its share in each fold.
  std::vector<std::vector<std::size_t>> folds(k);
  for (std::size_t p = 0; p < sequence.size(); ++p) folds[p % k].push_back(sequence[p]);
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

std::vector<FoldResult> kfold_evaluate(const std::vector<Example>& data, std::size_t k, const ModelConfig& model,
                                       const TrainConfig& config) {
  std::vector<int> labels;
  for (const auto& e : data) labels.push_back(e.label);
  const auto folds = stratified_folds(labels, k, config.seed);

  std::vector<FoldResult> results;
  for (std::size_t f = 0; f < k; ++f) {
    std::vector<bool> held(data.size(), false);
    for (auto i : folds[f]) held[i] = true;
    std::vector<Example> train_set;
    std::vector<Example> test_set;
    for (std::size_t i = 0; i < data.size(); ++i) (held[i] ? test_set : train_set).push_back(data[i]);

    ModelConfig mc = model;
    mc.seed = model.seed + f;
    Model net(mc);
    TrainConfig tc = config;
    tc.seed = config.seed + f;
    train(net, train_set, tc);

    FoldResult r;
    std::vector<int> preds;
    for (const auto& e : test_set) {
      const auto p = predict(net, e.input);
      preds.push_back(p.label);
      r.scores.push_back(p.score);
      r.labels.push_back(e.label);
    }
    r.confusion = metrics::confusion(preds, r.labels, 1);
    results.push_back(std::move(r));
  }
  return results;
}

}  // namespace opnn::afnet
