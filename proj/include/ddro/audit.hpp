#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "ddro/objective.hpp"
#include "ddro/policy.hpp"
#include "ddro/world.hpp"

namespace ddro {

// Random world with strictly positive rows drawn from the seed.
FiniteWorld random_world(std::size_t n_prompts, std::size_t n_responses, double t,
                         std::uint64_t seed);

// Reference policy with log-probabilities perturbed by `scale` times
// uniform noise in [-1, 1], re-drawn until every raw g_θ exceeds
// min_g and p̃_θ is positive everywhere.
TabularPolicy random_policy_near_reference(const FiniteWorld& world, double scale,
                                           std::uint64_t seed, double min_g = 1e-3);

struct AuditVariant {
  std::string name;
  std::unique_ptr<Objective> objective;
};

// One objective per shipped loss: population and empirical Bregman risks
// for every generator, the γ-regularized risk at γ in {0, 0.1}, the
// smoothed risk for every S, each pair baseline and the simplified DDRO
// pair loss. γ terms are differentiated (kl_in_gradient) so the gradient
// matches the reported loss.
std::vector<AuditVariant> audit_variants(const FiniteWorld& world, std::uint64_t seed,
                                         std::size_t n_samples = 64);

struct AuditResult {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t points = 0;
};

// Finite-difference audit of every variant at `points` random policies,
// checking every logit coordinate (see finite_difference_check).
std::vector<AuditResult> gradient_audit(const FiniteWorld& world, std::size_t points,
                                        std::uint64_t seed, double step = 1e-3);

}  // namespace ddro
