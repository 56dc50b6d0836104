#pragma once

#include <cstddef>

#include "ddro/matrix.hpp"
#include "ddro/world.hpp"

namespace ddro {

// Floor applied to probabilities before a log is taken.
inline constexpr double kLogFloor = 1e-300;

// Softmax-parameterized conditional distribution p_θ(y|x), one free logit
// per (prompt, response) cell. Probabilities are recomputed whenever the
// logits change.
class TabularPolicy {
 public:
  TabularPolicy() = default;
  explicit TabularPolicy(Matrix logits);

  static TabularPolicy uniform(std::size_t n_prompts, std::size_t n_responses);
  // Logits are log-probabilities of a strictly positive stochastic matrix.
  static TabularPolicy from_probs(const Matrix& probs);

  const Matrix& logits() const { return logits_; }
  const Matrix& probs() const { return probs_; }
  double prob(std::size_t x, std::size_t y) const { return probs_(x, y); }
  double log_prob(std::size_t x, std::size_t y) const;

  std::size_t n_prompts() const { return logits_.rows(); }
  std::size_t n_responses() const { return logits_.cols(); }

  void set_logits(Matrix logits);
  // θ ← θ + scale · direction
  void step(const Matrix& direction, double scale);

 private:
  void refresh();

  Matrix logits_;
  Matrix probs_;
};

// Row-wise softmax. Throws InvalidArgument on non-finite logits.
Matrix policy_probs(const TabularPolicy& policy);
Matrix softmax_rows(const Matrix& logits);

// Starts from p_ref; entries below epsilon_floor are raised to it and the
// row renormalized.
TabularPolicy init_from_reference(const FiniteWorld& world, double epsilon_floor = 1e-8);

// ∂ log p_θ(y|x) / ∂θ: onehot(y) - p_θ(.|x) on row x, zero elsewhere.
Matrix grad_log_prob(const TabularPolicy& policy, std::size_t prompt, std::size_t response);

// Accumulates coeff · ∂ log p_θ(y|x)/∂θ into grad without materializing the
// full matrix.
void add_grad_log_prob(const TabularPolicy& policy, std::size_t prompt, std::size_t response,
                       double coeff, Matrix& grad);

// ‖∂ log p_θ(y|x)/∂θ‖₂.
double grad_log_prob_norm(const TabularPolicy& policy, std::size_t prompt, std::size_t response);

}  // namespace ddro
