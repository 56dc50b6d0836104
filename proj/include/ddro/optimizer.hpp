#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "ddro/objective.hpp"
#include "ddro/policy.hpp"

namespace ddro {

enum class OptimizerKind { plain_gd, adaptive_moment };

OptimizerKind parse_optimizer(std::string_view name);
std::string_view optimizer_name(OptimizerKind kind);

struct TrainConfig {
  double learning_rate = 0.1;
  std::size_t steps = 1000;
  OptimizerKind optimizer = OptimizerKind::plain_gd;
  // 0 trains on the full dataset each step; otherwise a with-replacement
  // batch of this size (half D+, half D-) is drawn per step.
  std::size_t minibatch_size = 0;
  std::uint64_t seed = 0;
  std::size_t telemetry_every = 1;

  // adaptive_moment (AdamW) settings
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  double weight_decay = 0.0;

  // 0 is the full tabular model. k > 0 restricts logits to U Vᵀ with
  // U: prompts x k, V: responses x k, randomly initialized from the seed;
  // the starting policy's logits are then ignored.
  std::size_t low_rank = 0;

  void validate() const;
};

struct StepRecord {
  std::size_t step = 0;
  double loss = 0.0;
  double grad_norm = 0.0;
  std::size_t clamp_hits = 0;
  double g_min = 0.0;
  double g_max = 0.0;
  double tilde_neg_mass = 0.0;
};

struct TrainReport {
  std::vector<StepRecord> records;
  TabularPolicy final_policy;
  double final_loss = 0.0;
  // Realized interval of clamped g_θ over every evaluated step.
  double g_min = 0.0;
  double g_max = 0.0;
  std::size_t total_clamp_hits = 0;
  double wall_ms = 0.0;
};

// Called at each telemetry step with the policy the step's gradient was
// evaluated at.
using StepObserver = std::function<void(std::size_t step, const TabularPolicy& policy)>;

// Fixed-budget first-order descent on objective. Deterministic given
// config (wall_ms aside). Throws Divergence on a non-finite loss or
// gradient, InvalidArgument on a bad config.
TrainReport train(TabularPolicy policy, const Objective& objective, const TrainConfig& config,
                  const StepObserver& observer = {});

// Max over `trials` random logit coordinates (every coordinate when
// trials == 0) of |analytic - numeric| / max(1e-12, |numeric|), numeric
// being the fourth-order central difference with spacing `step`.
double finite_difference_check(const Objective& objective, const TabularPolicy& policy,
                               double step, std::size_t trials, std::uint64_t seed = 0);

// step,loss,grad_norm,clamp_hits,g_min,g_max,tilde_neg_mass
void write_report_csv(std::ostream& out, const TrainReport& report);

}  // namespace ddro
