#include "ddro/optimizer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>

#include "ddro/error.hpp"
#include "ddro/format.hpp"
#include "ddro/rng.hpp"

namespace ddro {

OptimizerKind parse_optimizer(std::string_view name) {
  if (name == "plain_gd" || name == "gd") return OptimizerKind::plain_gd;
  if (name == "adaptive_moment" || name == "adam" || name == "adamw") {
    return OptimizerKind::adaptive_moment;
  }
  throw InvalidArgument("unknown optimizer: " + std::string(name));
}

std::string_view optimizer_name(OptimizerKind kind) {
  return kind == OptimizerKind::plain_gd ? "plain_gd" : "adaptive_moment";
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) {
    throw InvalidArgument("learning_rate must be positive");
  }
  if (steps < 1) {
    throw InvalidArgument("steps ≥ 1 required");
  }
  if (telemetry_every < 1) {
    throw InvalidArgument("telemetry_every >= 1 required");
  }
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) {
    throw InvalidArgument("adam betas must lie in [0, 1)");
  }
}

namespace {

// Parameter vector and its map to logits.
class Parameterization {
 public:
  Parameterization(const TabularPolicy& start, const TrainConfig& config)
      : rows_(start.n_prompts()), cols_(start.n_responses()), rank_(config.low_rank) {
    if (rank_ == 0) {
      params_.assign(start.logits().flat().begin(), start.logits().flat().end());
      return;
    }
    CounterRng rng = CounterRng::stream(config.seed, 0, "train/low-rank-init");
    params_.resize((rows_ + cols_) * rank_);
    for (double& v : params_) {
      v = 0.2 * rng.uniform() - 0.1;
    }
  }

  std::vector<double>& params() { return params_; }

  Matrix logits() const {
    if (rank_ == 0) {
      Matrix m(rows_, cols_);
      std::copy(params_.begin(), params_.end(), m.flat().begin());
      return m;
    }
    Matrix m(rows_, cols_);
    for (std::size_t x = 0; x < rows_; ++x) {
      for (std::size_t y = 0; y < cols_; ++y) {
        double acc = 0.0;
        for (std::size_t k = 0; k < rank_; ++k) {
          acc += u(x, k) * v(y, k);
        }
        m(x, y) = acc;
      }
    }
    return m;
  }

  // Chain rule from ∂/∂logits to ∂/∂params.
  std::vector<double> pullback(const Matrix& grad) const {
    if (rank_ == 0) {
      return {grad.flat().begin(), grad.flat().end()};
    }
    std::vector<double> out(params_.size(), 0.0);
    for (std::size_t x = 0; x < rows_; ++x) {
      for (std::size_t y = 0; y < cols_; ++y) {
        const double g = grad(x, y);
        for (std::size_t k = 0; k < rank_; ++k) {
          out[x * rank_ + k] += g * v(y, k);
          out[(rows_ + y) * rank_ + k] += g * u(x, k);
        }
      }
    }
    return out;
  }

 private:
  double u(std::size_t x, std::size_t k) const { return params_[x * rank_ + k]; }
  double v(std::size_t y, std::size_t k) const { return params_[(rows_ + y) * rank_ + k]; }

  std::size_t rows_;
  std::size_t cols_;
  std::size_t rank_;
  std::vector<double> params_;
};

double l2(const std::vector<double>& v) {
  double acc = 0.0;
  for (double x : v) {
    acc += x * x;
  }
  return std::sqrt(acc);
}

}  // namespace

TrainReport train(TabularPolicy policy, const Objective& objective, const TrainConfig& config,
                  const StepObserver& observer) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();

  Parameterization param(policy, config);
  policy.set_logits(param.logits());
  std::vector<double>& theta = param.params();
  std::vector<double> m1(theta.size(), 0.0);
  std::vector<double> m2(theta.size(), 0.0);
  CounterRng batch_rng = CounterRng::stream(config.seed, 0, "train/minibatch");

  TrainReport report;
  report.g_min = std::numeric_limits<double>::infinity();
  report.g_max = -std::numeric_limits<double>::infinity();

  for (std::size_t step = 0; step < config.steps; ++step) {
    const Evaluation eval = config.minibatch_size == 0
                                ? objective.evaluate(policy)
                                : objective.evaluate_minibatch(policy, batch_rng,
                                                               config.minibatch_size);
    if (!std::isfinite(eval.loss)) {
      throw Divergence("non-finite loss", step);
    }
    const std::vector<double> grad = param.pullback(eval.gradient);
    const double grad_norm = l2(grad);
    if (!std::isfinite(grad_norm)) {
      throw Divergence("non-finite gradient", step);
    }
    report.g_min = std::min(report.g_min, eval.telemetry.g_min);
    report.g_max = std::max(report.g_max, eval.telemetry.g_max);
    report.total_clamp_hits += eval.telemetry.clamp_hits;

    if (step % config.telemetry_every == 0) {
      report.records.push_back({step, eval.loss, grad_norm, eval.telemetry.clamp_hits,
                                eval.telemetry.g_min, eval.telemetry.g_max,
                                eval.telemetry.tilde_neg_mass});
      if (observer) {
        observer(step, policy);
      }
    }

    if (config.optimizer == OptimizerKind::plain_gd) {
      for (std::size_t i = 0; i < theta.size(); ++i) {
        theta[i] -= config.learning_rate * grad[i];
      }
    } else {
      const double k = static_cast<double>(step + 1);
      const double c1 = 1.0 - std::pow(config.beta1, k);
      const double c2 = 1.0 - std::pow(config.beta2, k);
      for (std::size_t i = 0; i < theta.size(); ++i) {
        m1[i] = config.beta1 * m1[i] + (1.0 - config.beta1) * grad[i];
        m2[i] = config.beta2 * m2[i] + (1.0 - config.beta2) * grad[i] * grad[i];
        const double mhat = m1[i] / c1;
        const double vhat = m2[i] / c2;
        theta[i] -= config.learning_rate *
                    (mhat / (std::sqrt(vhat) + config.adam_epsilon) + config.weight_decay * theta[i]);
      }
    }
    policy.set_logits(param.logits());
  }

  const Evaluation final_eval = objective.evaluate(policy);
  if (!std::isfinite(final_eval.loss)) {
    throw Divergence("non-finite loss", config.steps);
  }
  report.final_loss = final_eval.loss;
  report.g_min = std::min(report.g_min, final_eval.telemetry.g_min);
  report.g_max = std::max(report.g_max, final_eval.telemetry.g_max);
  report.final_policy = std::move(policy);
  report.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return report;
}

double finite_difference_check(const Objective& objective, const TabularPolicy& policy,
                               double step, std::size_t trials, std::uint64_t seed) {
  if (!(step > 0.0)) {
    throw InvalidArgument("finite-difference step must be positive");
  }
  const Matrix analytic = objective.evaluate(policy).gradient;
  const std::size_t n = policy.logits().size();
  auto shifted_loss = [&](std::size_t i, double delta) {
    Matrix logits = policy.logits();
    logits.flat()[i] += delta;
    return objective.loss(TabularPolicy(std::move(logits)));
  };
  CounterRng rng = CounterRng::stream(seed, 0, "fd-check");
  double worst = 0.0;
  const std::size_t count = trials == 0 ? n : trials;
  for (std::size_t trial = 0; trial < count; ++trial) {
    const std::size_t i = trials == 0 ? trial : rng.below(n);
    // Fourth-order central stencil.
    const double numeric = (8.0 * (shifted_loss(i, step) - shifted_loss(i, -step)) -
                            (shifted_loss(i, 2.0 * step) - shifted_loss(i, -2.0 * step))) /
                           (12.0 * step);
    const double err = std::abs(analytic.flat()[i] - numeric) / std::max(1e-12, std::abs(numeric));
    worst = std::max(worst, err);
  }
  return worst;
}

void write_report_csv(std::ostream& out, const TrainReport& report) {
  out << "step,loss,grad_norm,clamp_hits,g_min,g_max,tilde_neg_mass\n";
  for (const StepRecord& r : report.records) {
    out << r.step << ',' << fmt_double(r.loss) << ',' << fmt_double(r.grad_norm) << ','
        << r.clamp_hits << ',' << fmt_double(r.g_min) << ',' << fmt_double(r.g_max) << ','
        << fmt_double(r.tilde_neg_mass) << '\n';
  }
}

}  // namespace ddro
