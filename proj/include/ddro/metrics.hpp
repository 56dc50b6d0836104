#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ddro/losses.hpp"
#include "ddro/optimizer.hpp"
#include "ddro/policy.hpp"
#include "ddro/world.hpp"

namespace ddro {

// Σ_x p_x(x) Σ_y p+(y|x) (p_θ(y|x) - p+(y|x))², the squared L²(p+) distance.
double l2_error(const TabularPolicy& policy, const FiniteWorld& world);

// ‖p_θ - p+‖_{L²(p+)} = sqrt(l2_error).
double l2_norm_error(const TabularPolicy& policy, const FiniteWorld& world);

// Both sides of
//   ‖p_θ - p+‖²_{L²(p+)} <= 2 (1-t)² / (t² m+² μ) · L_Breg(θ)
// with m+ the smallest nonzero p+ entry and μ = inf f'' over the interval I
// spanned by the clamped g_θ and g* values on supp(p+), widened by 1% of
// its width (never below half its lower end).
struct LemmaCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
  double m_plus = 0.0;
  double mu = 0.0;
  double interval_lo = 0.0;
  double interval_hi = 0.0;
  double breg_loss = 0.0;
  // Nonzero means some g_θ left the generator domain and was clamped, so
  // the inequality's hypothesis does not hold for this configuration.
  std::size_t clamp_hits = 0;
};

LemmaCheck lemma_bound_check(const TabularPolicy& policy, const FiniteWorld& world,
                             const ConvexGenerator& generator,
                             double clamp_epsilon = kDefaultClampEpsilon);

struct CurvePoint {
  std::size_t n = 0;
  double error_mean = 0.0;
  double error_stderr = 0.0;
  std::size_t seeds = 0;
};

// Mean estimation error as a function of n+ = n- = n.
struct ConsistencyCurve {
  std::vector<CurvePoint> points;

  // n strictly increasing, errors >= 0.
  void validate() const;
};

struct ScalingFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::size_t points_used = 0;
  std::vector<std::string> warnings;
};

// OLS of log(error) on log(n). Points with zero error are excluded with a
// warning; fewer than three usable points is an error.
ScalingFit scaling_fit(const ConsistencyCurve& curve);

// n,error_mean,error_stderr,seeds
void write_curve_csv(std::ostream& out, const ConsistencyCurve& curve);

struct SweepConfig {
  std::vector<std::size_t> grid;
  std::size_t seeds = 10;
  std::uint64_t base_seed = 0;
  LossSpec spec = default_spec();
  TrainConfig train = default_train();
  std::size_t jobs = 1;

  // Empirical Bregman risk, logistic generator, γ = 0.
  static LossSpec default_spec();
  // Plain gradient descent; enough steps to reach the empirical minimizer
  // well below the statistical error at n = 1e5.
  static TrainConfig default_train();

  void validate() const;
};

struct SweepRun {
  std::size_t n = 0;
  std::size_t replicate = 0;
  std::uint64_t data_seed = 0;
  double l2_sq = 0.0;
  double final_loss = 0.0;
};

struct SweepResult {
  ConsistencyCurve curve;          // L²(p+) norm error
  ConsistencyCurve squared_curve;  // squared L²(p+) error
  std::vector<SweepRun> runs;      // ordered by (n, replicate)
};

// Trains from the reference policy on freshly sampled data for every
// (n, replicate). Runs fan out over config.jobs threads; results are
// merged by run index so output is independent of scheduling.
SweepResult run_consistency_sweep(const FiniteWorld& world, const SweepConfig& config);

}  // namespace ddro
