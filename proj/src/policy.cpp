#include "ddro/policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ddro/error.hpp"

namespace ddro {

Matrix softmax_rows(const Matrix& logits) {
  Matrix probs(logits.rows(), logits.cols());
  for (std::size_t x = 0; x < logits.rows(); ++x) {
    auto in = logits.row(x);
    auto out = probs.row(x);
    double peak = -std::numeric_limits<double>::infinity();
    for (double v : in) {
      if (!std::isfinite(v)) {
        throw InvalidArgument("non-finite logits");
      }
      peak = std::max(peak, v);
    }
    double total = 0.0;
    for (std::size_t y = 0; y < in.size(); ++y) {
      out[y] = std::exp(in[y] - peak);
      total += out[y];
    }
    for (double& v : out) {
      v /= total;
    }
  }
  return probs;
}

TabularPolicy::TabularPolicy(Matrix logits) : logits_(std::move(logits)) { refresh(); }

TabularPolicy TabularPolicy::uniform(std::size_t n_prompts, std::size_t n_responses) {
  return TabularPolicy(Matrix(n_prompts, n_responses, 0.0));
}

TabularPolicy TabularPolicy::from_probs(const Matrix& probs) {
  Matrix logits(probs.rows(), probs.cols());
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double p = probs.flat()[i];
    if (!(p > 0.0)) {
      throw InvalidArgument("from_probs requires strictly positive probabilities");
    }
    logits.flat()[i] = std::log(p);
  }
  return TabularPolicy(std::move(logits));
}

double TabularPolicy::log_prob(std::size_t x, std::size_t y) const {
  return std::log(std::max(probs_(x, y), kLogFloor));
}

void TabularPolicy::set_logits(Matrix logits) {
  logits_ = std::move(logits);
  refresh();
}

void TabularPolicy::step(const Matrix& direction, double scale) {
  if (!direction.same_shape(logits_)) {
    throw InvalidArgument("step direction shape mismatch");
  }
  auto l = logits_.flat();
  auto d = direction.flat();
  for (std::size_t i = 0; i < l.size(); ++i) {
    l[i] += scale * d[i];
  }
  refresh();
}

void TabularPolicy::refresh() { probs_ = softmax_rows(logits_); }

Matrix policy_probs(const TabularPolicy& policy) { return softmax_rows(policy.logits()); }

TabularPolicy init_from_reference(const FiniteWorld& world, double epsilon_floor) {
  Matrix ref = reference_distribution(world);
  for (std::size_t x = 0; x < ref.rows(); ++x) {
    auto row = ref.row(x);
    bool floored = false;
    for (double& v : row) {
      if (v < epsilon_floor) {
        v = epsilon_floor;
        floored = true;
      }
    }
    if (floored) {
      double total = 0.0;
      for (double v : row) {
        total += v;
      }
      for (double& v : row) {
        v /= total;
      }
    }
  }
  return TabularPolicy::from_probs(ref);
}

namespace {

void check_index(const TabularPolicy& policy, std::size_t prompt, std::size_t response) {
  if (prompt >= policy.n_prompts() || response >= policy.n_responses()) {
    throw InvalidArgument("policy index out of range");
  }
}

}  // namespace

Matrix grad_log_prob(const TabularPolicy& policy, std::size_t prompt, std::size_t response) {
  Matrix grad(policy.n_prompts(), policy.n_responses());
  add_grad_log_prob(policy, prompt, response, 1.0, grad);
  return grad;
}

void add_grad_log_prob(const TabularPolicy& policy, std::size_t prompt, std::size_t response,
                       double coeff, Matrix& grad) {
  check_index(policy, prompt, response);
  auto p = policy.probs().row(prompt);
  auto g = grad.row(prompt);
  for (std::size_t y = 0; y < p.size(); ++y) {
    g[y] -= coeff * p[y];
  }
  g[response] += coeff;
}

double grad_log_prob_norm(const TabularPolicy& policy, std::size_t prompt, std::size_t response) {
  check_index(policy, prompt, response);
  auto p = policy.probs().row(prompt);
  double acc = 0.0;
  for (std::size_t y = 0; y < p.size(); ++y) {
    const double d = (y == response ? 1.0 : 0.0) - p[y];
    acc += d * d;
  }
  return std::sqrt(acc);
}

}  // namespace ddro
