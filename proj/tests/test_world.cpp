#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "ddro/error.hpp"
#include "ddro/world.hpp"
#include "oracle.hpp"

using namespace ddro;

namespace {

FiniteWorld random_test_world(std::mt19937_64& rng, std::size_t nx, std::size_t ny) {
  Matrix plus(nx, ny), minus(nx, ny);
  for (std::size_t x = 0; x < nx; ++x) {
    auto a = oracle::random_simplex(rng, ny);
    auto b = oracle::random_simplex(rng, ny);
    std::copy(a.begin(), a.end(), plus.row(x).begin());
    std::copy(b.begin(), b.end(), minus.row(x).begin());
  }
  std::uniform_real_distribution<double> u(0.05, 0.95);
  return build_distribution_world(plus, minus, u(rng), oracle::random_simplex(rng, nx));
}

}  // namespace

TEST_CASE("W1 is a valid world") {
  const FiniteWorld w = example_world_w1();
  CHECK(w.n_prompts() == 1);
  CHECK(w.n_responses() == 3);
  CHECK(w.t() == 0.5);
  double sp = 0.0, sm = 0.0;
  for (std::size_t y = 0; y < 3; ++y) {
    sp += w.p_plus()(0, y);
    sm += w.p_minus()(0, y);
  }
  CHECK(std::abs(sp - 1.0) <= 1e-12);
  CHECK(std::abs(sm - 1.0) <= 1e-12);
}

TEST_CASE("symmetric world has unit ratio everywhere") {
  const double third = 1.0 / 3.0;
  const FiniteWorld w =
      build_distribution_world({{third, third, third}}, {{third, third, third}}, 0.5, {1.0});
  const Matrix ref = reference_distribution(w);
  for (std::size_t y = 0; y < 3; ++y) CHECK(ref(0, y) == doctest::Approx(third).epsilon(1e-15));
}

TEST_CASE("world construction rejects bad inputs") {
  const Matrix p{{0.5, 0.3, 0.2}};
  const Matrix m{{0.2, 0.3, 0.5}};
  CHECK_THROWS_WITH_AS(build_distribution_world(p, m, 1.0, {1.0}),
                       doctest::Contains("t out of open interval"), InvalidArgument);
  CHECK_THROWS_AS(build_distribution_world(p, m, 0.0, {1.0}), InvalidArgument);
  CHECK_THROWS_AS(build_distribution_world({{0.5, 0.3, 0.3}}, m, 0.5, {1.0}), InvalidArgument);
  CHECK_THROWS_AS(build_distribution_world(p, {{0.5, 0.5}}, 0.5, {1.0}), InvalidArgument);
  CHECK_THROWS_AS(build_distribution_world(p, m, 0.5, {0.5, 0.5}), InvalidArgument);
  CHECK_THROWS_AS(build_distribution_world({{1.2, -0.2, 0.0}}, m, 0.5, {1.0}), InvalidArgument);
}

TEST_CASE("reference distribution of W1") {
  const Matrix ref = reference_distribution(example_world_w1());
  CHECK(ref(0, 0) == doctest::Approx(0.35).epsilon(1e-14));
  CHECK(ref(0, 1) == doctest::Approx(0.30).epsilon(1e-14));
  CHECK(ref(0, 2) == doctest::Approx(0.35).epsilon(1e-14));
}

TEST_CASE("reference of equal components is exact for any t") {
  const Matrix p{{0.1, 0.6, 0.3}};
  for (double t : {0.01, 0.5, 0.999}) {
    const Matrix ref = reference_distribution(build_distribution_world(p, p, t, {1.0}));
    CHECK(max_abs_diff(ref, p) <= 1e-15);
  }
  const Matrix ref = reference_distribution(
      build_distribution_world({{0.5, 0.3, 0.2}}, {{0.2, 0.3, 0.5}}, 0.999, {1.0}));
  CHECK(max_abs_diff(ref, Matrix{{0.5, 0.3, 0.2}}) <= 1e-3);
}

TEST_CASE("property: mixture identity on random worlds") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const FiniteWorld w = random_test_world(rng, 1 + trial % 3, 2 + trial % 5);
    const Matrix ref = reference_distribution(w);
    for (std::size_t x = 0; x < w.n_prompts(); ++x) {
      double row = 0.0;
      for (std::size_t y = 0; y < w.n_responses(); ++y) {
        const double expect = w.t() * w.p_plus()(x, y) + (1.0 - w.t()) * w.p_minus()(x, y);
        CHECK(std::abs(ref(x, y) - expect) <= 1e-12);
        row += ref(x, y);
      }
      CHECK(std::abs(row - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("unpaired sampler frequencies approach p+") {
  const FiniteWorld w = example_world_w1();
  const UnpairedDataset d = sample_unpaired(w, 100000, 100000, 7);
  CHECK(d.plus.size() == 100000);
  CHECK(d.minus.size() == 100000);
  const Matrix fp = empirical_frequencies(d.plus, 1, 3);
  const Matrix fm = empirical_frequencies(d.minus, 1, 3);
  CHECK(max_abs_diff(fp, w.p_plus()) <= 0.01);
  CHECK(max_abs_diff(fm, w.p_minus()) <= 0.01);
}

TEST_CASE("property: sampler consistency at n = 1e6 over fixed seeds") {
  const FiniteWorld w = example_world_w1();
  for (std::uint64_t seed : {1, 2, 3}) {
    const UnpairedDataset d = sample_unpaired(w, 1000000, 1, seed);
    CHECK(max_abs_diff(empirical_frequencies(d.plus, 1, 3), w.p_plus()) < 0.005);
  }
}

TEST_CASE("sampler is deterministic in the seed") {
  const FiniteWorld w = example_world_w1();
  CHECK(sample_unpaired(w, 500, 300, 42) == sample_unpaired(w, 500, 300, 42));
  CHECK_FALSE(sample_unpaired(w, 500, 300, 42) == sample_unpaired(w, 500, 300, 43));
}

TEST_CASE("point-mass p+ always yields that response") {
  const FiniteWorld w =
      build_distribution_world({{0.0, 0.0, 1.0}}, {{0.4, 0.4, 0.2}}, 0.5, {1.0});
  const UnpairedDataset d = sample_unpaired(w, 1000, 10, 3);
  CHECK(std::all_of(d.plus.begin(), d.plus.end(), [](const Sample& s) { return s.response == 2; }));
}

TEST_CASE("sampler rejects empty sides") {
  CHECK_THROWS_AS(sample_unpaired(example_world_w1(), 0, 5, 1), InvalidArgument);
  CHECK_THROWS_AS(sample_unpaired(example_world_w1(), 5, 0, 1), InvalidArgument);
}

TEST_CASE("multi-prompt sampler follows prompt distribution") {
  const FiniteWorld w = build_distribution_world({{0.5, 0.5}, {0.9, 0.1}}, {{0.5, 0.5}, {0.1, 0.9}},
                                                 0.5, {0.25, 0.75});
  const UnpairedDataset d = sample_unpaired(w, 200000, 10, 5);
  const Matrix f = empirical_frequencies(d.plus, 2, 2);
  CHECK(f(0, 0) + f(0, 1) == doctest::Approx(0.25).epsilon(0.02));
  CHECK(f(1, 0) == doctest::Approx(0.75 * 0.9).epsilon(0.02));
}

TEST_CASE("cyclic world") {
  const PairwiseWorld w = build_cyclic_world(0.8);
  CHECK(w.pref(0, 1) == 0.8);
  CHECK(w.pref(1, 2) == 0.8);
  CHECK(w.pref(2, 0) == 0.8);
  CHECK(w.pref(1, 0) == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(w.pref(0, 0) == 0.5);

  const PairwiseWorld half = build_cyclic_world(0.5);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) CHECK(half.pref(i, j) == 0.5);

  const PairwiseWorld det = build_cyclic_world(1.0);
  CHECK(det.pref(0, 1) == 1.0);
  CHECK(det.pref(1, 0) == 0.0);

  CHECK_THROWS_AS(build_cyclic_world(1.5), InvalidArgument);
  CHECK_THROWS_AS(build_cyclic_world(-0.1), InvalidArgument);
}

TEST_CASE("property: pairwise antisymmetry") {
  for (double t : {0.0, 0.13, 0.5, 0.77, 1.0}) {
    const PairwiseWorld w = build_cyclic_world(t);
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j)
        if (i != j) CHECK(std::abs(w.pref(i, j) + w.pref(j, i) - 1.0) <= 1e-12);
  }
  CHECK_THROWS_AS(PairwiseWorld(Matrix{{0.5, 0.7}, {0.7, 0.5}}), InvalidArgument);
}

TEST_CASE("pair_to_unpaired") {
  PairedDataset p{1, 4, {{0, 1, 3}, {0, 0, 2}, {0, 1, 0}}};
  const UnpairedDataset u = pair_to_unpaired(p);
  CHECK(u.plus.size() == 3);
  CHECK(u.minus.size() == 3);
  CHECK(u.plus[0] == Sample{0, 1});
  CHECK(u.minus[0] == Sample{0, 3});
  CHECK_THROWS_AS(pair_to_unpaired(PairedDataset{1, 4, {}}), InvalidArgument);
}

TEST_CASE("pair_to_unpaired preserves the winner histogram") {
  const PairedDataset p = sample_paired(example_world_w1(), 5000, 9);
  std::vector<int> direct(3, 0), via(3, 0);
  for (const Triple& t : p.triples) ++direct[t.winner];
  for (const Sample& s : pair_to_unpaired(p).plus) ++via[s.response];
  CHECK(direct == via);
}

TEST_CASE("comparisons are balanced across pairs") {
  const PairwiseWorld w = build_cyclic_world(1.0);
  const auto data = sample_comparisons(w, 10, 1);
  int counts[3][3] = {};
  for (const Comparison& c : data) ++counts[c.winner][c.loser];
  // With t_pref = 1 the winner is always the cyclic one.
  CHECK(counts[0][1] + counts[1][2] + counts[2][0] == 10);
  CHECK(std::abs(counts[0][1] - counts[1][2]) <= 1);
  CHECK(std::abs(counts[1][2] - counts[2][0]) <= 1);
}

TEST_CASE("datasets validate indices") {
  UnpairedDataset d{1, 3, {{0, 3}}, {{0, 0}}};
  CHECK_THROWS_AS(d.validate(), InvalidArgument);
  d.plus[0].response = 2;
  CHECK_NOTHROW(d.validate());
  PairedDataset p{1, 3, {{1, 0, 0}}};
  CHECK_THROWS_AS(p.validate(), InvalidArgument);
}
