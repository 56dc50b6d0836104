#include <doctest.h>

#include <cmath>
#include <random>

#include "ddro/ratio.hpp"
#include "oracle.hpp"

using namespace ddro;

namespace {

TabularPolicy policy_with_probs(std::vector<double> p) {
  Matrix m(1, p.size());
  for (std::size_t i = 0; i < p.size(); ++i) m(0, i) = p[i];
  return TabularPolicy::from_probs(m);
}

}  // namespace

TEST_CASE("g* and r* on W1") {
  const FiniteWorld w = example_world_w1();
  const RatioField g = g_star(w);
  const RatioField r = r_star(w);
  const double g_expect[] = {0.4, 1.0, 2.5};
  const double r_expect[] = {0.7, 1.0, 1.75};
  for (std::size_t y = 0; y < 3; ++y) {
    CHECK(g.defined(0, y));
    CHECK(std::abs(g(0, y) - g_expect[y]) <= 1e-14);
    CHECK(std::abs(r(0, y) - r_expect[y]) <= 1e-14);
    // substitution back into g* = r*/(1-t) - t/(1-t)
    CHECK(std::abs(r(0, y) / 0.5 - 1.0 - g_expect[y]) <= 1e-14);
  }
}

TEST_CASE("ratios of identical distributions are one") {
  const Matrix p{{0.2, 0.5, 0.3}};
  const FiniteWorld w = build_distribution_world(p, p, 0.4, {1.0});
  for (std::size_t y = 0; y < 3; ++y) {
    CHECK(g_star(w)(0, y) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(r_star(w)(0, y) == doctest::Approx(1.0).epsilon(1e-15));
  }
}

TEST_CASE("support handling") {
  const FiniteWorld w =
      build_distribution_world({{0.5, 0.5, 0.0}}, {{0.4, 0.0, 0.6}}, 0.5, {1.0});
  const RatioField g = g_star(w);
  CHECK(g.defined(0, 1));
  CHECK(g(0, 1) == 0.0);
  CHECK_FALSE(g.defined(0, 2));
  CHECK_FALSE(r_star(w).defined(0, 2));
}

TEST_CASE("property: r* = t + (1-t) g* on random worlds") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t ny = 2 + trial % 4;
    const auto a = oracle::random_simplex(rng, ny);
    const auto b = oracle::random_simplex(rng, ny);
    Matrix pp(1, ny), pm(1, ny);
    for (std::size_t y = 0; y < ny; ++y) {
      pp(0, y) = a[y];
      pm(0, y) = b[y];
    }
    const double t = u(rng);
    const FiniteWorld w = build_distribution_world(pp, pm, t, {1.0});
    const RatioField g = g_star(w), r = r_star(w);
    for (std::size_t y = 0; y < ny; ++y) {
      CHECK(std::abs(r(0, y) / (1 - t) - t / (1 - t) - g(0, y)) <= 1e-12);
      CHECK(std::abs(t + (1 - t) * g(0, y) - r(0, y)) <= 1e-12);
    }
    // g_θ at the reference policy is one
    const GThetaField gt = g_theta(init_from_reference(w), reference_distribution(w), t);
    for (double v : gt.raw.flat()) CHECK(std::abs(v - 1.0) <= 1e-12);
    // p̃ rows sum to one for an arbitrary policy
    const Matrix tp = tilde_p(policy_with_probs(oracle::random_simplex(rng, ny)),
                              reference_distribution(w), t);
    double s = 0.0;
    for (double v : tp.flat()) s += v;
    CHECK(std::abs(s - 1.0) <= 1e-12);
  }
}

TEST_CASE("g_θ at p+ recovers g* and p̃ recovers p-") {
  const FiniteWorld w = example_world_w1();
  const Matrix ref = reference_distribution(w);
  const TabularPolicy p = policy_with_probs({0.5, 0.3, 0.2});
  const GThetaField g = g_theta(p, ref, 0.5);
  const double expect[] = {0.4, 1.0, 2.5};
  for (std::size_t y = 0; y < 3; ++y) CHECK(std::abs(g.clamped(0, y) - expect[y]) <= 1e-12);
  CHECK(g.clamp_hits == 0);
  CHECK(max_abs_diff(tilde_p(p, ref, 0.5), w.p_minus()) <= 1e-12);
  CHECK(max_abs_diff(tilde_p(init_from_reference(w), ref, 0.5), ref) <= 1e-12);
}

TEST_CASE("property: Proposition-3.3 form on random worlds with zeros") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 50; ++trial) {
    auto a = oracle::random_simplex(rng, 4);
    // zero one p+ entry, renormalize
    a[trial % 4] = 0.0;
    double s = a[0] + a[1] + a[2] + a[3];
    for (double& v : a) v /= s;
    const auto b = oracle::random_simplex(rng, 4);
    Matrix pp(1, 4), pm(1, 4);
    for (std::size_t y = 0; y < 4; ++y) {
      pp(0, y) = a[y];
      pm(0, y) = b[y];
    }
    // A softmax policy cannot put exactly zero mass off supp(p+); give the
    // empty cell 1e-300 and compare on the support.
    const FiniteWorld w = build_distribution_world(pp, pm, 0.5, {1.0});
    const Matrix ref = reference_distribution(w);
    Matrix probs = pp;
    probs(0, trial % 4) = 1e-300;
    const Matrix tp = tilde_p(TabularPolicy::from_probs(probs), ref, 0.5);
    for (std::size_t y = 0; y < 4; ++y)
      if (pp(0, y) > 0.0) CHECK(std::abs(tp(0, y) - pm(0, y)) <= 1e-12);
  }
}

TEST_CASE("negative g_θ is clamped and reported raw") {
  const Matrix ref = reference_distribution(example_world_w1());
  const GThetaField g = g_theta(policy_with_probs({0.8, 0.1, 0.1}), ref, 0.5, 1e-6);
  CHECK(std::abs(g.raw(0, 0) - (-0.125)) <= 1e-12);
  CHECK(g.clamped(0, 0) == 1e-6);
  CHECK(g.clamp_hits == 1);
  CHECK(g.min_clamped == 1e-6);
  CHECK(g_theta_at(policy_with_probs({0.8, 0.1, 0.1}), ref, 0.5, 0, 0) ==
        doctest::Approx(-0.125).epsilon(1e-12));
  // p̃ goes negative at the same cell: (0.35 - 0.4) / 0.5
  const Matrix tp = tilde_p(policy_with_probs({0.8, 0.1, 0.1}), ref, 0.5);
  CHECK(tp(0, 0) == doctest::Approx(-0.1).epsilon(1e-12));
  CHECK(tilde_negativity_mass(tp) == doctest::Approx(0.1).epsilon(1e-12));
}
