#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ddro/matrix.hpp"
#include "ddro/objective.hpp"
#include "ddro/policy.hpp"
#include "ddro/world.hpp"

namespace ddro {

// Log-density-ratio terms on one preference pair (x, y+, y-):
//   a       = log p_θ(y+|x) / p_ref(y+|x)
//   b       = log p_θ(y-|x) / p_ref(y-|x)
//   b_tilde = log p̃_θ(y-|x) / p_ref(y-|x)
struct PairTerms {
  double a = 0.0;
  double b = 0.0;
  double b_tilde = 0.0;
};

// Throws TildeNegativity when p̃_θ(y-|x) <= 0.
PairTerms pair_terms(const TabularPolicy& policy, const Matrix& p_ref, double t,
                     const Triple& triple);

enum class BaselineMethod { dpo, ipo, sppo, kto, bco };

inline constexpr BaselineMethod kAllBaselines[] = {BaselineMethod::dpo, BaselineMethod::ipo,
                                                   BaselineMethod::sppo, BaselineMethod::kto,
                                                   BaselineMethod::bco};

BaselineMethod parse_baseline(std::string_view name);
std::string_view baseline_name(BaselineMethod method);

// Per-pair losses in their simplified unified form (regularizers omitted):
//   dpo   -log σ(a - b)
//   ipo   (a - b - 1)^2
//   sppo  (a - 1/2)^2 + (-b - 1/2)^2
//   kto   σ(-a) + σ(b)
//   bco   -log σ(a - δ) - log σ(-b - δ)
double baseline_pair_loss(BaselineMethod method, const PairTerms& terms, double delta = 0.0);

struct PairLossPartials {
  double value = 0.0;
  double d_a = 0.0;
  double d_b = 0.0;
  double d_b_tilde = 0.0;
};

PairLossPartials baseline_pair_partials(BaselineMethod method, const PairTerms& terms,
                                        double delta = 0.0);

// DDRO at t = 1/2, γ = 0 on one pair: 2 log 2 - a - b_tilde.
double simplified_ddro_pair_loss(const PairTerms& terms);

// Mean per-pair loss over a paired dataset, differentiable in θ. Either a
// baseline method or the simplified DDRO pair loss.
class PairObjective : public Objective {
 public:
  static PairObjective baseline(PairedDataset data, Matrix p_ref, double t,
                                BaselineMethod method, double delta = 0.0);
  static PairObjective simplified_ddro(PairedDataset data, Matrix p_ref);

  Evaluation evaluate(const TabularPolicy& policy) const override;
  std::string name() const override;

 private:
  PairObjective(PairedDataset data, Matrix p_ref, double t, std::optional<BaselineMethod> method,
                double delta);

  PairedDataset data_;
  Matrix p_ref_;
  double t_;
  std::optional<BaselineMethod> method_;  // nullopt: simplified DDRO
  double delta_;
};

// --- Bradley-Terry ----------------------------------------------------------

// Rewards r(x, .) for a single prompt, gauge-fixed so rewards[0] == 0.
struct BTRewards {
  std::vector<double> rewards;

  // σ(r_i - r_j)
  double predicted(std::size_t i, std::size_t j) const;
  Matrix predicted_matrix() const;
};

struct BTFitResult {
  BTRewards rewards;
  double nll = 0.0;
  double grad_norm = 0.0;
  std::size_t steps = 0;
};

// Mean -log σ(r_w - r_l) over observed comparisons.
double bt_nll(std::span<const double> rewards, std::span<const Comparison> data);
std::vector<double> bt_nll_gradient(std::span<const double> rewards,
                                    std::span<const Comparison> data);

// Infinite-sample NLL with every unordered pair weighted equally:
// mean over i < j of -[P_ij log σ(r_i - r_j) + P_ji log σ(r_j - r_i)].
double bt_population_nll(std::span<const double> rewards, const PairwiseWorld& world);
std::vector<double> bt_population_gradient(std::span<const double> rewards,
                                           const PairwiseWorld& world);

// Full-batch gradient descent with rewards[0] pinned at 0. `init` defaults
// to all zeros; it is shifted so init[0] == 0. Throws Divergence on a
// non-finite loss.
BTFitResult bt_fit(std::span<const Comparison> data, std::size_t n_responses, double lr,
                   std::size_t steps, std::vector<double> init = {});
BTFitResult bt_fit_population(const PairwiseWorld& world, double lr, std::size_t steps,
                              std::vector<double> init = {});

}  // namespace ddro
