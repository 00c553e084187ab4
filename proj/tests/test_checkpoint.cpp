#include <doctest.h>

#include <filesystem>
#include <random>

#include "opnn/afnet.hpp"
#include "opnn/checkpoint.hpp"
#include "opnn/layers.hpp"

using namespace opnn;

namespace {

struct Net {
  Sequential<float> seq;
  explicit Net(std::uint64_t seed, std::size_t q = 3) {
    std::mt19937_64 rng(seed);
    seq.emplace<SelfOnn1d<float>>(SelfOnnConfig{1, 4, 5, q}).initialize(rng);
    seq.emplace<BatchNorm1d<float>>(BatchNormConfig{4});
    seq.emplace<SelfOnn1d<float>>(SelfOnnConfig{4, 1, 3, q}).initialize(rng);
  }
};

std::vector<float> flat(Module<float>& m) {
  std::vector<float> out;
  for (auto* p : m.parameters()) out.insert(out.end(), p->value.begin(), p->value.end());
  return out;
}

}  // namespace

TEST_SUITE("checkpoint") {
  TEST_CASE("round trip restores every parameter and buffer") {
    Net a(1), b(2);
    auto* rm = a.seq.parameters()[4];
    REQUIRE(!rm->trainable);
    rm->value[0] = 0.125f;
    const auto bytes = encode_checkpoint({{"net", &a.seq}});
    CHECK(std::string(bytes.begin(), bytes.begin() + 5) == "OPNN1");
    CHECK(flat(a.seq) != flat(b.seq));
    decode_checkpoint(bytes, {{"net", &b.seq}});
    CHECK(flat(a.seq) == flat(b.seq));
  }

  TEST_CASE("file round trip with several sections") {
    Net a(1), b(2), c(3), d(4);
    const auto path = std::filesystem::temp_directory_path() / "opnn_ckpt_test.opnn";
    save_checkpoint(path, {{"x", &a.seq}, {"y", &b.seq}});
    load_checkpoint(path, {{"x", &c.seq}, {"y", &d.seq}});
    CHECK(flat(a.seq) == flat(c.seq));
    CHECK(flat(b.seq) == flat(d.seq));
    std::filesystem::remove(path);
  }

  TEST_CASE("corruption and mismatches are rejected") {
    Net a(1), other_q(1, 5), b(2);
    auto bytes = encode_checkpoint({{"net", &a.seq}});

    auto truncated = bytes;
    truncated.pop_back();
    CHECK_THROWS_AS(decode_checkpoint(truncated, {{"net", &b.seq}}), DataError);

    auto extended = bytes;
    extended.push_back(0);
    CHECK_THROWS_AS(decode_checkpoint(extended, {{"net", &b.seq}}), DataError);

    auto magic = bytes;
    magic[0] = 'X';
    CHECK_THROWS_AS(decode_checkpoint(magic, {{"net", &b.seq}}), DataError);

    CHECK_THROWS_AS(decode_checkpoint(bytes, {{"other", &b.seq}}), DataError);
    CHECK_THROWS_AS(decode_checkpoint(bytes, {{"net", &other_q.seq}}), DataError);
    CHECK_THROWS_AS(load_checkpoint("/nonexistent/file.opnn", {{"net", &b.seq}}), DataError);
  }

  TEST_CASE("a classifier survives the round trip with identical predictions") {
    auto a = afnet::build_model(3, 4, 5);
    auto b = afnet::build_model(3, 4, 6);
    decode_checkpoint(encode_checkpoint({{"afnet", &a}}), {{"afnet", &b}});
    Tensor<float> x(1, 2500);
    for (std::size_t i = 0; i < x.length(); ++i) x(0, i) = static_cast<float>((i % 250) / 250.0);
    CHECK(afnet::predict(a, x).score == afnet::predict(b, x).score);
  }
}
