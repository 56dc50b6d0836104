#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "ddro/baselines.hpp"
#include "ddro/error.hpp"
#include "ddro/losses.hpp"
#include "oracle.hpp"

using namespace ddro;

namespace {

const double kLog2 = std::log(2.0);

TabularPolicy policy_with_probs(std::vector<double> p) {
  Matrix m(1, p.size());
  for (std::size_t i = 0; i < p.size(); ++i) m(0, i) = p[i];
  return TabularPolicy::from_probs(m);
}

double max_gap(const std::vector<double>& r) {
  return *std::max_element(r.begin(), r.end()) - *std::min_element(r.begin(), r.end());
}

}  // namespace

TEST_CASE("pair terms") {
  const FiniteWorld w = example_world_w1();
  const Matrix ref = reference_distribution(w);
  const PairTerms z = pair_terms(init_from_reference(w), ref, 0.5, {0, 0, 2});
  CHECK(std::abs(z.a) <= 1e-15);
  CHECK(std::abs(z.b) <= 1e-15);
  CHECK(std::abs(z.b_tilde) <= 1e-15);

  const PairTerms t = pair_terms(policy_with_probs({0.5, 0.3, 0.2}), ref, 0.5, {0, 0, 2});
  CHECK(std::abs(t.a - 0.3566749439387324) <= 1e-13);
  CHECK(std::abs(t.b - (-0.5596157879354225)) <= 1e-13);
  CHECK(std::abs(t.b_tilde - 0.3566749439387324) <= 1e-13);
  CHECK(std::abs(t.a - std::log(0.5 / 0.35)) <= 1e-15);
}

TEST_CASE("pair terms reject a nonpositive p̃") {
  const Matrix ref = reference_distribution(example_world_w1());
  // p_θ(y3) = 0.8 > p_ref(y3) / t = 0.7
  try {
    pair_terms(policy_with_probs({0.1, 0.1, 0.8}), ref, 0.5, {0, 0, 2});
    FAIL("expected TildeNegativity");
  } catch (const TildeNegativity& e) {
    CHECK(e.raw_value() == doctest::Approx((0.35 - 0.4) / 0.5).epsilon(1e-12));
  }
}

TEST_CASE("Table 1 forms at the hand-evaluated points") {
  const PairTerms zero{0.0, 0.0, 0.0};
  CHECK(std::abs(baseline_pair_loss(BaselineMethod::dpo, zero) - kLog2) <= 1e-12);
  CHECK(std::abs(baseline_pair_loss(BaselineMethod::ipo, zero) - 1.0) <= 1e-12);
  CHECK(std::abs(baseline_pair_loss(BaselineMethod::sppo, zero) - 0.5) <= 1e-12);
  CHECK(std::abs(baseline_pair_loss(BaselineMethod::kto, zero) - 1.0) <= 1e-12);
  CHECK(std::abs(baseline_pair_loss(BaselineMethod::bco, zero, 0.0) - 2.0 * kLog2) <= 1e-12);

  CHECK(std::abs(baseline_pair_loss(BaselineMethod::dpo, {0.7, 0.7, 0.0}) - kLog2) <= 1e-12);
  CHECK(baseline_pair_loss(BaselineMethod::ipo, {1.3, 0.3, 0.0}) == doctest::Approx(0.0));
  CHECK(baseline_pair_loss(BaselineMethod::sppo, {0.5, -0.5, 0.0}) == 0.0);
  // bco with a margin: -log σ(a - δ) - log σ(-b - δ)
  CHECK(baseline_pair_loss(BaselineMethod::bco, {0.2, -0.1, 0.0}, 0.3) ==
        doctest::Approx(-std::log(oracle::sigmoid(-0.1)) - std::log(oracle::sigmoid(-0.2)))
            .epsilon(1e-14));

  CHECK(parse_baseline("kto") == BaselineMethod::kto);
  CHECK_THROWS_WITH_AS(parse_baseline("orpo"), doctest::Contains("unknown method"),
                       InvalidArgument);
}

TEST_CASE("property: DPO shift invariance") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int i = 0; i < 200; ++i) {
    const double a = u(rng), b = u(rng), c = u(rng);
    CHECK(std::abs(baseline_pair_loss(BaselineMethod::dpo, {a, b, 0.0}) -
                   baseline_pair_loss(BaselineMethod::dpo, {a + c, b + c, 0.0})) <= 1e-12);
  }
}

TEST_CASE("property: pair loss partials match differences") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  const double h = 1e-6;
  for (BaselineMethod m : kAllBaselines) {
    for (int i = 0; i < 50; ++i) {
      const PairTerms t{u(rng), u(rng), u(rng)};
      const PairLossPartials p = baseline_pair_partials(m, t, 0.2);
      CHECK(p.value == baseline_pair_loss(m, t, 0.2));
      const double da = (baseline_pair_loss(m, {t.a + h, t.b, t.b_tilde}, 0.2) -
                         baseline_pair_loss(m, {t.a - h, t.b, t.b_tilde}, 0.2)) / (2 * h);
      const double db = (baseline_pair_loss(m, {t.a, t.b + h, t.b_tilde}, 0.2) -
                         baseline_pair_loss(m, {t.a, t.b - h, t.b_tilde}, 0.2)) / (2 * h);
      CHECK(p.d_a == doctest::Approx(da).epsilon(1e-6));
      CHECK(p.d_b == doctest::Approx(db).epsilon(1e-6));
      CHECK(p.d_b_tilde == 0.0);
    }
  }
}

TEST_CASE("simplified DDRO pair loss") {
  const FiniteWorld w = example_world_w1();
  const Matrix ref = reference_distribution(w);
  CHECK(std::abs(simplified_ddro_pair_loss(pair_terms(init_from_reference(w), ref, 0.5, {0, 0, 2})) -
                 2.0 * kLog2) <= 1e-12);
  const PairTerms opt = pair_terms(policy_with_probs({0.5, 0.3, 0.2}), ref, 0.5, {0, 0, 2});
  CHECK(std::abs(simplified_ddro_pair_loss(opt) - 0.6729444732424258) <= 1e-12);
}

TEST_CASE("property: simplified DDRO equals the singleton logistic risk at t = 1/2") {
  std::mt19937_64 rng(3);
  const FiniteWorld w = example_world_w1();
  const Matrix ref = reference_distribution(w);
  int checked = 0;
  for (int i = 0; i < 200 && checked < 100; ++i) {
    const TabularPolicy p = policy_with_probs(oracle::random_simplex(rng, 3));
    const Triple tr{0, rng() % 3, rng() % 3};
    if (tilde_p(p, ref, 0.5)(0, tr.loser) <= 0.0 || g_theta(p, ref, 0.5).clamp_hits > 0) continue;
    const double lhs = simplified_ddro_pair_loss(pair_terms(p, ref, 0.5, tr));
    const UnpairedDataset d{1, 3, {{0, tr.winner}}, {{0, tr.loser}}};
    CHECK(std::abs(lhs - empirical_breg_loss(p, d, ref, ConvexGenerator(), 0.5)) <= 1e-12);
    ++checked;
  }
  CHECK(checked == 100);
}

TEST_CASE("pair objective averages per-pair losses") {
  const FiniteWorld w = example_world_w1();
  const Matrix ref = reference_distribution(w);
  const PairedDataset d = sample_paired(w, 30, 4);
  const TabularPolicy p = policy_with_probs({0.3, 0.35, 0.35});
  double mean = 0.0;
  for (const Triple& t : d.triples)
    mean += baseline_pair_loss(BaselineMethod::ipo, pair_terms(p, ref, 0.5, t)) / 30.0;
  CHECK(PairObjective::baseline(d, ref, 0.5, BaselineMethod::ipo).loss(p) ==
        doctest::Approx(mean).epsilon(1e-13));
}

TEST_CASE("property: BT gauge invariance") {
  const auto data = sample_comparisons(build_cyclic_world(0.7), 300, 5);
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int i = 0; i < 100; ++i) {
    std::vector<double> r{u(rng), u(rng), u(rng)};
    std::vector<double> s = r;
    const double c = u(rng) * 10.0;
    for (double& v : s) v += c;
    CHECK(std::abs(bt_nll(r, data) - bt_nll(s, data)) <= 1e-10);
  }
}

TEST_CASE("property: cyclic symmetry makes equal rewards stationary") {
  for (double t : {0.0, 0.2, 0.8, 1.0}) {
    for (double level : {0.0, 1.5, -4.0}) {
      const std::vector<double> r(3, level);
      const auto g = bt_population_gradient(r, build_cyclic_world(t));
      for (double v : g) CHECK(std::abs(v) <= 1e-12);
    }
  }
}

TEST_CASE("BT fit on cyclic samples cannot represent the preference") {
  const auto data = sample_comparisons(build_cyclic_world(0.8), 100000, 1);
  const BTFitResult fit = bt_fit(data, 3, 1.0, 3000, {0.0, 0.5, -0.5});
  CHECK(fit.rewards.rewards[0] == 0.0);
  CHECK(max_gap(fit.rewards.rewards) <= 0.02);
  CHECK(std::abs(fit.rewards.predicted(0, 1) - 0.5) <= 0.01);
}

TEST_CASE("BT fit population mode") {
  const BTFitResult bad = bt_fit_population(build_cyclic_world(0.8), 1.0, 5000, {0.0, 0.7, -0.4});
  CHECK(max_gap(bad.rewards.rewards) <= 1e-10);
  CHECK(std::abs(bad.rewards.predicted(0, 1) - 0.5) <= 1e-10);
  CHECK(bad.grad_norm <= 1e-10);
  const BTFitResult good = bt_fit_population(build_cyclic_world(0.5), 1.0, 5000, {0.0, 0.7, -0.4});
  CHECK(std::abs(good.rewards.predicted(0, 1) - 0.5) <= 1e-3);
}

TEST_CASE("BT fit on transitive separable data") {
  std::vector<Comparison> data;
  for (int i = 0; i < 20; ++i) data.push_back({0, 1});
  for (int i = 0; i < 20; ++i) data.push_back({1, 2});
  const BTFitResult short_fit = bt_fit(data, 3, 1.0, 100);
  const BTFitResult long_fit = bt_fit(data, 3, 1.0, 5000);
  CHECK(long_fit.rewards.rewards[0] > long_fit.rewards.rewards[1]);
  CHECK(long_fit.rewards.rewards[1] > long_fit.rewards.rewards[2]);
  CHECK(long_fit.rewards.predicted(0, 1) > short_fit.rewards.predicted(0, 1));
  CHECK(long_fit.rewards.predicted(0, 1) > 0.99);
  CHECK(long_fit.rewards.predicted(0, 1) <= 1.0);
}

TEST_CASE("BT fit divergence and bad input") {
  const auto data = sample_comparisons(build_cyclic_world(0.8), 30, 1);
  CHECK_THROWS_AS(bt_fit({}, 3, 1.0, 10), InvalidArgument);
  CHECK_THROWS_AS(bt_fit(data, 3, 1e308, 50, {0.0, 1.0, -1.0}), Divergence);
}
