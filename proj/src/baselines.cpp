#include "ddro/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <string>

#include "ddro/error.hpp"
#include "ddro/losses.hpp"

namespace ddro {

namespace {

double softplus(double x) { return -log_sigmoid(-x); }

double tilde_at(const TabularPolicy& policy, const Matrix& p_ref, double t, std::size_t x,
                std::size_t y) {
  return (p_ref(x, y) - t * policy.prob(x, y)) / (1.0 - t);
}

void check_triple(const TabularPolicy& policy, const Matrix& p_ref, const Triple& tr) {
  if (policy.n_prompts() != p_ref.rows() || policy.n_responses() != p_ref.cols()) {
    throw InvalidArgument("policy and reference shapes differ");
  }
  if (tr.prompt >= p_ref.rows() || tr.winner >= p_ref.cols() || tr.loser >= p_ref.cols()) {
    throw InvalidArgument("triple index out of range");
  }
}

}  // namespace

PairTerms pair_terms(const TabularPolicy& policy, const Matrix& p_ref, double t,
                     const Triple& triple) {
  if (!(t > 0.0 && t < 1.0)) {
    throw InvalidArgument("t out of open interval (0, 1)");
  }
  check_triple(policy, p_ref, triple);
  const auto [x, yw, yl] = triple;
  const double tilde = tilde_at(policy, p_ref, t, x, yl);
  if (!(tilde > 0.0)) {
    throw TildeNegativity(tilde);
  }
  PairTerms terms;
  terms.a = policy.log_prob(x, yw) - std::log(p_ref(x, yw));
  terms.b = policy.log_prob(x, yl) - std::log(p_ref(x, yl));
  terms.b_tilde = std::log(tilde) - std::log(p_ref(x, yl));
  return terms;
}

BaselineMethod parse_baseline(std::string_view name) {
  for (BaselineMethod m : kAllBaselines) {
    if (baseline_name(m) == name) {
      return m;
    }
  }
  throw InvalidArgument("unknown method: " + std::string(name));
}

std::string_view baseline_name(BaselineMethod method) {
  switch (method) {
    case BaselineMethod::dpo:
      return "dpo";
    case BaselineMethod::ipo:
      return "ipo";
    case BaselineMethod::sppo:
      return "sppo";
    case BaselineMethod::kto:
      return "kto";
    case BaselineMethod::bco:
      return "bco";
  }
  return "unknown";
}

PairLossPartials baseline_pair_partials(BaselineMethod method, const PairTerms& terms,
                                        double delta) {
  const double a = terms.a;
  const double b = terms.b;
  PairLossPartials p;
  switch (method) {
    case BaselineMethod::dpo:
      p.value = softplus(-(a - b));
      p.d_a = -sigmoid(-(a - b));
      p.d_b = -p.d_a;
      break;
    case BaselineMethod::ipo: {
      const double r = a - b - 1.0;
      p.value = r * r;
      p.d_a = 2.0 * r;
      p.d_b = -2.0 * r;
      break;
    }
    case BaselineMethod::sppo:
      p.value = (a - 0.5) * (a - 0.5) + (-b - 0.5) * (-b - 0.5);
      p.d_a = 2.0 * (a - 0.5);
      p.d_b = 2.0 * (b + 0.5);
      break;
    case BaselineMethod::kto:
      p.value = sigmoid(-a) + sigmoid(b);
      p.d_a = -sigmoid(-a) * sigmoid(a);
      p.d_b = sigmoid(b) * sigmoid(-b);
      break;
    case BaselineMethod::bco:
      p.value = softplus(-(a - delta)) + softplus(-(-b - delta));
      p.d_a = -sigmoid(-(a - delta));
      p.d_b = sigmoid(b + delta);
      break;
  }
  return p;
}

double baseline_pair_loss(BaselineMethod method, const PairTerms& terms, double delta) {
  return baseline_pair_partials(method, terms, delta).value;
}

double simplified_ddro_pair_loss(const PairTerms& terms) {
  return 2.0 * std::numbers::ln2 - terms.a - terms.b_tilde;
}

PairObjective::PairObjective(PairedDataset data, Matrix p_ref, double t,
                             std::optional<BaselineMethod> method, double delta)
    : data_(std::move(data)), p_ref_(std::move(p_ref)), t_(t), method_(method), delta_(delta) {
  data_.validate();
  if (data_.n_prompts != p_ref_.rows() || data_.n_responses != p_ref_.cols()) {
    throw InvalidArgument("paired data and reference shapes differ");
  }
  if (!(t_ > 0.0 && t_ < 1.0)) {
    throw InvalidArgument("t out of open interval (0, 1)");
  }
}

PairObjective PairObjective::baseline(PairedDataset data, Matrix p_ref, double t,
                                      BaselineMethod method, double delta) {
  return PairObjective(std::move(data), std::move(p_ref), t, method, delta);
}

PairObjective PairObjective::simplified_ddro(PairedDataset data, Matrix p_ref) {
  return PairObjective(std::move(data), std::move(p_ref), 0.5, std::nullopt, 0.0);
}

Evaluation PairObjective::evaluate(const TabularPolicy& policy) const {
  Evaluation out;
  out.gradient = Matrix(policy.n_prompts(), policy.n_responses());
  const double inv_n = 1.0 / static_cast<double>(data_.triples.size());
  for (const Triple& tr : data_.triples) {
    check_triple(policy, p_ref_, tr);
    PairTerms terms;
    PairLossPartials partials;
    if (method_) {
      terms.a = policy.log_prob(tr.prompt, tr.winner) - std::log(p_ref_(tr.prompt, tr.winner));
      terms.b = policy.log_prob(tr.prompt, tr.loser) - std::log(p_ref_(tr.prompt, tr.loser));
      partials = baseline_pair_partials(*method_, terms, delta_);
    } else {
      terms = pair_terms(policy, p_ref_, t_, tr);
      partials.value = simplified_ddro_pair_loss(terms);
      partials.d_a = -1.0;
      partials.d_b_tilde = -1.0;
    }
    out.loss += inv_n * partials.value;
    add_grad_log_prob(policy, tr.prompt, tr.winner, inv_n * partials.d_a, out.gradient);
    double d_loser = partials.d_b;
    if (partials.d_b_tilde != 0.0) {
      // ∂b̃/∂log p_θ(y-) = -t p_θ(y-) / ((1 - t) p̃_θ(y-))
      const double tilde = tilde_at(policy, p_ref_, t_, tr.prompt, tr.loser);
      d_loser += partials.d_b_tilde * (-t_ * policy.prob(tr.prompt, tr.loser) / ((1.0 - t_) * tilde));
    }
    add_grad_log_prob(policy, tr.prompt, tr.loser, inv_n * d_loser, out.gradient);
  }
  out.telemetry.tilde_neg_mass = tilde_negativity_mass(tilde_p(policy, p_ref_, t_));
  return out;
}

std::string PairObjective::name() const {
  return method_ ? std::string(baseline_name(*method_)) : std::string("ddro-simplified");
}

// --- Bradley-Terry ----------------------------------------------------------

double BTRewards::predicted(std::size_t i, std::size_t j) const {
  return sigmoid(rewards.at(i) - rewards.at(j));
}

Matrix BTRewards::predicted_matrix() const {
  Matrix m(rewards.size(), rewards.size());
  for (std::size_t i = 0; i < rewards.size(); ++i) {
    for (std::size_t j = 0; j < rewards.size(); ++j) {
      m(i, j) = predicted(i, j);
    }
  }
  return m;
}

double bt_nll(std::span<const double> rewards, std::span<const Comparison> data) {
  if (data.empty()) {
    throw InvalidArgument("empty comparison data");
  }
  double acc = 0.0;
  for (const Comparison& c : data) {
    acc += softplus(-(rewards[c.winner] - rewards[c.loser]));
  }
  return acc / static_cast<double>(data.size());
}

std::vector<double> bt_nll_gradient(std::span<const double> rewards,
                                    std::span<const Comparison> data) {
  std::vector<double> grad(rewards.size(), 0.0);
  const double inv_n = 1.0 / static_cast<double>(data.size());
  for (const Comparison& c : data) {
    const double s = sigmoid(-(rewards[c.winner] - rewards[c.loser]));
    grad[c.winner] -= inv_n * s;
    grad[c.loser] += inv_n * s;
  }
  return grad;
}

namespace {

std::size_t pair_count(std::size_t k) { return k * (k - 1) / 2; }

}  // namespace

double bt_population_nll(std::span<const double> rewards, const PairwiseWorld& world) {
  const std::size_t k = world.n_responses();
  double acc = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      const double d = rewards[i] - rewards[j];
      acc += world.pref(i, j) * softplus(-d) + world.pref(j, i) * softplus(d);
    }
  }
  return acc / static_cast<double>(pair_count(k));
}

std::vector<double> bt_population_gradient(std::span<const double> rewards,
                                           const PairwiseWorld& world) {
  const std::size_t k = world.n_responses();
  std::vector<double> grad(k, 0.0);
  const double inv_n = 1.0 / static_cast<double>(pair_count(k));
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      // ∂/∂d of P_ij softplus(-d) + P_ji softplus(d) is σ(d) - P_ij.
      const double g = inv_n * (sigmoid(rewards[i] - rewards[j]) - world.pref(i, j));
      grad[i] += g;
      grad[j] -= g;
    }
  }
  return grad;
}

namespace {

using LossFn = std::function<double(std::span<const double>)>;
using GradFn = std::function<std::vector<double>(std::span<const double>)>;

BTFitResult descend(std::size_t k, const LossFn& loss, const GradFn& grad, double lr,
                    std::size_t steps, std::vector<double> init) {
  if (!(lr > 0.0)) {
    throw InvalidArgument("learning rate must be positive");
  }
  if (k < 2) {
    throw InvalidArgument("need at least two responses");
  }
  std::vector<double> r = init.empty() ? std::vector<double>(k, 0.0) : std::move(init);
  if (r.size() != k) {
    throw InvalidArgument("initial rewards have the wrong length");
  }
  const double anchor = r[0];
  for (double& v : r) {
    v -= anchor;
  }
  for (std::size_t s = 0; s < steps; ++s) {
    std::vector<double> g = grad(r);
    g[0] = 0.0;
    for (std::size_t i = 1; i < k; ++i) {
      r[i] -= lr * g[i];
    }
    if (!std::isfinite(loss(r))) {
      throw Divergence("non-finite Bradley-Terry loss", s);
    }
  }
  BTFitResult out;
  out.nll = loss(r);
  if (!std::isfinite(out.nll)) {
    throw Divergence("non-finite Bradley-Terry loss", steps);
  }
  std::vector<double> g = grad(r);
  g[0] = 0.0;
  double sq = 0.0;
  for (double v : g) {
    sq += v * v;
  }
  out.grad_norm = std::sqrt(sq);
  out.steps = steps;
  out.rewards.rewards = std::move(r);
  return out;
}

}  // namespace

BTFitResult bt_fit(std::span<const Comparison> data, std::size_t n_responses, double lr,
                   std::size_t steps, std::vector<double> init) {
  if (data.empty()) {
    throw InvalidArgument("empty comparison data");
  }
  for (const Comparison& c : data) {
    if (c.winner >= n_responses || c.loser >= n_responses) {
      throw InvalidArgument("comparison index out of range");
    }
  }
  return descend(
      n_responses, [&](std::span<const double> r) { return bt_nll(r, data); },
      [&](std::span<const double> r) { return bt_nll_gradient(r, data); }, lr, steps,
      std::move(init));
}

BTFitResult bt_fit_population(const PairwiseWorld& world, double lr, std::size_t steps,
                              std::vector<double> init) {
  return descend(
      world.n_responses(), [&](std::span<const double> r) { return bt_population_nll(r, world); },
      [&](std::span<const double> r) { return bt_population_gradient(r, world); }, lr, steps,
      std::move(init));
}

}  // namespace ddro
