#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "opnn/entropy.hpp"
#include "opnn/error.hpp"
#include "oracles.hpp"

using namespace opnn;
using namespace opnn::entropy;

namespace {

std::vector<double> noise(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<double> x(n);
  for (auto& v : x) v = u(rng);
  return x;
}

std::vector<double> alternation(std::size_t n, double a = 0.2, double b = 0.9) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = i % 2 ? b : a;
  return x;
}

EntropyParams absolute(double r) {
  EntropyParams p;
  p.r = r;
  p.r_is_absolute = true;
  return p;
}

sig::Segment segment(std::vector<double> x, std::size_t window) {
  sig::Segment s;
  s.samples = std::move(x);
  s.source = {"s", window};
  return s;
}

}  // namespace

TEST_SUITE("entropy") {
  TEST_CASE("brute-force agreement on white noise") {
    std::mt19937_64 rng(99);
    for (std::size_t n : {50, 200, 500}) {
      const auto x = noise(rng, n);
      const EntropyParams p;
      const double r = 0.1 * oracle::sd(x);
      CHECK(std::abs(apen(x, p) - oracle::apen(x, 2, r)) < 1e-9);
      const double se = sampen(x, p);
      const double se_ref = oracle::sampen(x, 2, r);
      CHECK((se == se_ref || std::abs(se - se_ref) < 1e-9));
      CHECK(std::abs(fuzzyen(x, p) - oracle::fuzzyen(x, 2, r, 2)) < 1e-9);
      CHECK(std::abs(permen(x, p) - oracle::permen(x, 3, true)) < 1e-9);
    }
  }

  TEST_CASE("other embedding dimensions and orders") {
    std::mt19937_64 rng(4);
    const auto x = noise(rng, 120);
    EntropyParams p;
    p.m = 3;
    p.r = 0.3;
    p.fuzzy_power = 3;
    p.perm_order = 4;
    p.normalize_perm = false;
    const double r = 0.3 * oracle::sd(x);
    CHECK(std::abs(apen(x, p) - oracle::apen(x, 3, r)) < 1e-9);
    CHECK(std::abs(sampen(x, p) - oracle::sampen(x, 3, r)) < 1e-9);
    CHECK(std::abs(fuzzyen(x, p) - oracle::fuzzyen(x, 3, r, 3)) < 1e-9);
    CHECK(std::abs(permen(x, p) - oracle::permen(x, 4, false)) < 1e-9);
  }

  TEST_CASE("degenerate sequences") {
    const std::vector<double> flat(100, 0.4);
    CHECK(apen(flat, absolute(0.1)) == 0.0);
    CHECK(fuzzyen(flat, absolute(0.1)) == 0.0);
    CHECK_THROWS_AS(apen(flat, EntropyParams{}), Error);
    CHECK_THROWS_AS(sampen(flat, EntropyParams{}), Error);

    const auto alt = alternation(200);
    CHECK(sampen(alt, absolute(0.2)) == 0.0);
    CHECK(std::abs(permen(alt, EntropyParams{}) - std::log(2.0) / std::log(6.0)) < 1e-9);

    std::vector<double> ramp(300);
    for (std::size_t i = 0; i < ramp.size(); ++i) ramp[i] = static_cast<double>(i);
    CHECK(permen(ramp, EntropyParams{}) == 0.0);

    CHECK_THROWS_AS(sampen(std::vector<double>{1, 2, 3}, EntropyParams{}), Error);
    CHECK_THROWS_AS(permen(std::vector<double>{1, 2, 3}, EntropyParams{}), Error);
  }

  TEST_CASE("undefined sample entropy is +infinity") {
    // Distinct values far apart: no template matches at all.
    std::vector<double> x(30);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(i * i);
    CHECK(std::isinf(sampen(x, absolute(0.5))));
  }

  TEST_CASE("ordinal pattern index") {
    CHECK(ordinal_pattern(std::vector<double>{1, 2, 3}) == 0);
    CHECK(ordinal_pattern(std::vector<double>{3, 2, 1}) == 5);
    // Ties: the earlier sample ranks lower, so a flat window counts as rising.
    CHECK(ordinal_pattern(std::vector<double>{2, 2, 2}) == 0);
  }

  TEST_CASE("uniform noise has near-maximal permutation entropy") {
    double mean = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      std::mt19937_64 rng(seed);
      mean += permen(noise(rng, 2500), EntropyParams{}) / 10;
    }
    CHECK(mean >= 0.99);
  }

  TEST_CASE("property: invariances and nonnegativity") {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(0.1, 10);
    for (int trial = 0; trial < 30; ++trial) {
      const auto x = noise(rng, 60 + rng() % 200);
      const double shift = u(rng);
      const double scale = u(rng);
      std::vector<double> shifted(x), scaled(x);
      for (auto& v : shifted) v += shift;
      for (auto& v : scaled) v *= scale;
      const EntropyParams p;
      const double s = sampen(x, p);
      if (std::isfinite(s)) {
        CHECK(s >= 0);
        CHECK(sampen(shifted, p) == doctest::Approx(s).epsilon(1e-9));
        CHECK(sampen(scaled, p) == doctest::Approx(s).epsilon(1e-9));
      }
      CHECK(fuzzyen(shifted, p) == doctest::Approx(fuzzyen(x, p)).epsilon(1e-9));
      CHECK(apen(x, p) >= 0);
      CHECK(permen(x, p) >= 0);
    }
  }

  TEST_CASE("property: entropy grows with additive noise") {
    const std::vector<double> levels{0.0, 0.05, 0.2};
    std::vector<double> se(3, 0.0), pe(3, 0.0);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      std::mt19937_64 rng(seed);
      std::normal_distribution<double> g(0, 1);
      std::vector<double> base(600);
      for (std::size_t i = 0; i < base.size(); ++i) base[i] = std::sin(2 * std::numbers::pi * i / 50.0);
      std::vector<double> eps(base.size());
      for (auto& v : eps) v = g(rng);
      for (std::size_t l = 0; l < 3; ++l) {
        auto x = base;
        for (std::size_t i = 0; i < x.size(); ++i) x[i] += levels[l] * eps[i];
        se[l] += sampen(x, EntropyParams{}) / 20;
        pe[l] += permen(x, EntropyParams{}) / 20;
      }
    }
    CHECK(se[0] < se[1]);
    CHECK(se[1] < se[2]);
    CHECK(pe[0] < pe[1]);
    CHECK(pe[1] < pe[2]);
  }

  TEST_CASE("report rows and CSV") {
    std::mt19937_64 rng(1);
    std::vector<sig::Segment> set;
    for (std::size_t i = 0; i < 3; ++i) set.push_back(segment(noise(rng, 300), i));
    const auto rep = entropy_report(set, set, set);
    REQUIRE(rep.rows.size() == 3);
    CHECK(rep.rows[0].sampen == rep.rows[1].sampen);
    CHECK(rep.rows[1].apen == rep.rows[2].apen);

    const auto single = entropy_row("one", {set[0]}, EntropyParams{});
    CHECK(single.fuzzyen == fuzzyen(set[0].samples));
    CHECK(single.sampen == sampen(set[0].samples));
    CHECK(single.apen == apen(set[0].samples));
    CHECK(single.permen == permen(set[0].samples));

    const auto csv = report_csv(rep);
    CHECK(csv.rfind("Data,FuzzyEn,SampEn,ApEn,PermEn,Segments,SampEnUndefined\nRaw Original,", 0) == 0);
    CHECK(csv.find("Restored (Pass 1)") != std::string::npos);

    CHECK_THROWS_AS(entropy_report({}, {}, {}), Error);
    auto misaligned = set;
    misaligned[0].source.window = 9;
    CHECK_THROWS_AS(entropy_report(set, misaligned, set), Error);
  }

  TEST_CASE("infinite sample entropies are excluded from the mean and counted") {
    std::vector<double> sparse(30);
    for (std::size_t i = 0; i < sparse.size(); ++i) sparse[i] = static_cast<double>(i * i);
    std::mt19937_64 rng(2);
    const auto ok = noise(rng, 300);
    const auto row = entropy_row("mixed", {segment(sparse, 0), segment(ok, 1)}, absolute(0.05));
    CHECK(row.sampen_undefined == 1);
    CHECK(row.sampen == doctest::Approx(sampen(ok, absolute(0.05))));
  }

  TEST_CASE("flat segments count as perfectly regular in a report row") {
    std::mt19937_64 rng(3);
    const auto ok = noise(rng, 300);
    const auto row = entropy_row("flat", {segment(std::vector<double>(300, 0.5), 0), segment(ok, 1)}, EntropyParams{});
    CHECK(row.sampen_undefined == 0);
    CHECK(row.apen == doctest::Approx(apen(ok) / 2));
    CHECK(row.sampen == doctest::Approx(sampen(ok) / 2));
  }

  TEST_CASE("reference row formats like the report") {
    EntropyReport golden;
    golden.rows.push_back({"Raw Original", 0.0170, 0.1827, 0.2316, 0.9507, 1, 0});
    golden.rows.push_back({"Restored (Pass 1)", 0.0161, 0.1615, 0.2124, 0.7424, 1, 0});
    const auto csv = report_csv(golden);
    CHECK(csv.find("Raw Original,0.0170,0.1827,0.2316,0.9507,1,0") != std::string::npos);
    CHECK(csv.find("Restored (Pass 1),0.0161,0.1615,0.2124,0.7424,1,0") != std::string::npos);
  }
}
