#include "ddro/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "ddro/error.hpp"

namespace ddro {

// --- generators -------------------------------------------------------------

std::string_view ConvexGenerator::name() const {
  switch (kind_) {
    case GeneratorKind::logistic:
      return "logistic";
    case GeneratorKind::quadratic:
      return "quadratic";
    case GeneratorKind::kl:
      return "kl";
  }
  return "unknown";
}

bool ConvexGenerator::in_domain(double u) const {
  if (!std::isfinite(u)) {
    return false;
  }
  return kind_ == GeneratorKind::quadratic || u > 0.0;
}

void ConvexGenerator::require_domain(double u) const {
  if (!in_domain(u)) {
    throw InvalidArgument("argument " + std::to_string(u) + " outside the domain of the " +
                          std::string(name()) + " generator");
  }
}

double ConvexGenerator::eval(double u) const {
  // f extends continuously to u = 0 (0 log 0 = 0), which lets a true ratio
  // g* = 0 appear as the second Bregman argument.
  if (u != 0.0) {
    require_domain(u);
  }
  const double u_log_u = u == 0.0 ? 0.0 : u * std::log(u);
  double f = 0.0;
  switch (kind_) {
    case GeneratorKind::logistic:
      f = u_log_u - (1.0 + u) * std::log1p(u);
      break;
    case GeneratorKind::quadratic:
      f = 0.5 * (u - 1.0) * (u - 1.0);
      break;
    case GeneratorKind::kl:
      f = u_log_u;
      break;
  }
  return f + slope_ * u + offset_;
}

double ConvexGenerator::deriv(double u) const {
  require_domain(u);
  double df = 0.0;
  switch (kind_) {
    case GeneratorKind::logistic:
      df = std::log(u) - std::log1p(u);
      break;
    case GeneratorKind::quadratic:
      df = u - 1.0;
      break;
    case GeneratorKind::kl:
      df = std::log(u) + 1.0;
      break;
  }
  return df + slope_;
}

double ConvexGenerator::deriv2(double u) const {
  require_domain(u);
  switch (kind_) {
    case GeneratorKind::logistic:
      return 1.0 / (u * (1.0 + u));
    case GeneratorKind::quadratic:
      return 1.0;
    case GeneratorKind::kl:
      return 1.0 / u;
  }
  return 0.0;
}

GeneratorValues ConvexGenerator::values(double u) const {
  return {eval(u), deriv(u), deriv2(u)};
}

double ConvexGenerator::min_second_derivative(double lo, double hi) const {
  if (lo > hi) {
    std::swap(lo, hi);
  }
  return std::min(deriv2(lo), deriv2(hi));
}

ConvexGenerator ConvexGenerator::with_affine_shift(double slope, double offset) const {
  ConvexGenerator out = *this;
  out.slope_ += slope;
  out.offset_ += offset;
  return out;
}

GeneratorKind parse_generator(std::string_view name) {
  if (name == "logistic") return GeneratorKind::logistic;
  if (name == "quadratic" || name == "lsif") return GeneratorKind::quadratic;
  if (name == "kl" || name == "kliep") return GeneratorKind::kl;
  throw InvalidArgument("unknown generator: " + std::string(name));
}

GeneratorValues generator_eval(GeneratorKind kind, double u) {
  return ConvexGenerator(kind).values(u);
}

double bregman_divergence(const ConvexGenerator& generator, double g, double g_tilde) {
  return generator.eval(g_tilde) - generator.eval(g) - generator.deriv(g) * (g_tilde - g);
}

// --- smoothing --------------------------------------------------------------

double sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double log_sigmoid(double x) {
  if (x >= 0.0) {
    return -std::log1p(std::exp(-x));
  }
  return x - std::log1p(std::exp(x));
}

double SmoothingFn::eval(double x) const {
  switch (kind) {
    case SmoothingKind::identity:
      return x;
    case SmoothingKind::sig:
      return sigmoid(x);
    case SmoothingKind::logsig:
      return log_sigmoid(x);
    case SmoothingKind::neglogsigneg:
      return -log_sigmoid(-x);
  }
  return x;
}

double SmoothingFn::deriv(double x) const {
  switch (kind) {
    case SmoothingKind::identity:
      return 1.0;
    case SmoothingKind::sig:
      return sigmoid(x) * sigmoid(-x);
    case SmoothingKind::logsig:
      return sigmoid(-x);
    case SmoothingKind::neglogsigneg:
      return sigmoid(x);
  }
  return 1.0;
}

std::string_view SmoothingFn::name() const {
  switch (kind) {
    case SmoothingKind::identity:
      return "identity";
    case SmoothingKind::sig:
      return "sig";
    case SmoothingKind::logsig:
      return "logsig";
    case SmoothingKind::neglogsigneg:
      return "neglogsigneg";
  }
  return "unknown";
}

SmoothingKind parse_smoothing(std::string_view name) {
  for (SmoothingKind k : kAllSmoothings) {
    if (SmoothingFn{k}.name() == name) {
      return k;
    }
  }
  throw InvalidArgument("unknown smoothing function: " + std::string(name));
}

LossForm parse_loss_form(std::string_view name) {
  if (name == "bregman") return LossForm::bregman;
  if (name == "ddro") return LossForm::ddro;
  if (name == "practical") return LossForm::practical;
  throw InvalidArgument("unknown loss form: " + std::string(name));
}

std::string_view loss_form_name(LossForm form) {
  switch (form) {
    case LossForm::bregman:
      return "bregman";
    case LossForm::ddro:
      return "ddro";
    case LossForm::practical:
      return "practical";
  }
  return "unknown";
}

void LossSpec::validate() const {
  if (!(gamma >= 0.0)) {
    throw InvalidArgument("gamma must be nonnegative");
  }
  if (!(t > 0.0 && t < 1.0)) {
    throw InvalidArgument("t out of open interval (0, 1)");
  }
  if (!(clamp_epsilon > 0.0)) {
    throw InvalidArgument("clamp_epsilon must be positive");
  }
}

// --- per-sample terms -------------------------------------------------------

namespace {

// Value of one sample's contribution and its derivative in g, split into
// the Bregman/smoothed part and the γ-free KL part (multiplied by γ later).
struct Term {
  double main = 0.0;
  double main_dg = 0.0;
  double kl = 0.0;
  double kl_dg = 0.0;
};

double inv_log(double g) { return std::log(g) / g; }
double inv_log_dg(double g) { return (1.0 - std::log(g)) / (g * g); }

Term plus_term(const LossSpec& spec, double g) {
  Term term;
  switch (spec.form) {
    case LossForm::bregman:
    case LossForm::ddro: {
      const GeneratorValues v = spec.generator.values(g);
      term.main = -v.f + v.df * g;
      term.main_dg = g * v.d2f;
      break;
    }
    case LossForm::practical: {
      const double u = std::log1p(g);
      term.main = spec.smoothing.eval(u);
      term.main_dg = spec.smoothing.deriv(u) / (1.0 + g);
      break;
    }
  }
  if (spec.form != LossForm::bregman) {
    term.kl = spec.t * inv_log(g);
    term.kl_dg = spec.t * inv_log_dg(g);
  }
  return term;
}

Term minus_term(const LossSpec& spec, double g) {
  Term term;
  switch (spec.form) {
    case LossForm::bregman:
    case LossForm::ddro: {
      term.main = -spec.generator.deriv(g);
      term.main_dg = -spec.generator.deriv2(g);
      break;
    }
    case LossForm::practical: {
      const double u = std::log1p(1.0 / g);
      term.main = spec.smoothing.eval(u);
      term.main_dg = -spec.smoothing.deriv(u) / (g * (1.0 + g));
      break;
    }
  }
  if (spec.form == LossForm::ddro) {
    // The whole D- sum is subtracted in the ddro form.
    term.kl = -(1.0 - spec.t) * inv_log(g);
    term.kl_dg = -(1.0 - spec.t) * inv_log_dg(g);
  } else if (spec.form == LossForm::practical) {
    term.kl = (1.0 - spec.t) * inv_log(g);
    term.kl_dg = (1.0 - spec.t) * inv_log_dg(g);
  }
  return term;
}

// ∂g_θ/∂log p_θ at a cell: -p_ref / ((1 - t) p_θ).
double dg_dlogp(const TabularPolicy& policy, const Matrix& p_ref, double t, std::size_t x,
                std::size_t y) {
  return -p_ref(x, y) / ((1.0 - t) * std::max(policy.prob(x, y), kLogFloor));
}

void check_shapes(const TabularPolicy& policy, const Matrix& p_ref, const CellWeights& w) {
  if (policy.n_prompts() != p_ref.rows() || policy.n_responses() != p_ref.cols() ||
      !p_ref.same_shape(w.plus) || !p_ref.same_shape(w.minus)) {
    throw InvalidArgument("policy, reference and data shapes differ");
  }
}

LossTelemetry telemetry_of(const GThetaField& field, const TabularPolicy& policy,
                           const Matrix& p_ref, double t) {
  LossTelemetry tel;
  tel.clamp_hits = field.clamp_hits;
  tel.g_min = field.min_clamped;
  tel.g_max = field.max_clamped;
  tel.tilde_neg_mass = tilde_negativity_mass(tilde_p(policy, p_ref, t));
  return tel;
}

}  // namespace

CellWeights cell_weights(const UnpairedDataset& data) {
  data.validate();
  return {empirical_frequencies(data.plus, data.n_prompts, data.n_responses),
          empirical_frequencies(data.minus, data.n_prompts, data.n_responses)};
}

// --- population -------------------------------------------------------------

double population_breg_loss(const TabularPolicy& policy, const FiniteWorld& world,
                            const ConvexGenerator& generator, double clamp_epsilon) {
  return PopulationBregObjective(world, generator, clamp_epsilon).evaluate(policy).loss;
}

double population_risk_terms(const TabularPolicy& policy, const FiniteWorld& world,
                             const ConvexGenerator& generator, double clamp_epsilon) {
  const Matrix p_ref = reference_distribution(world);
  const GThetaField g = g_theta(policy, p_ref, world.t(), clamp_epsilon);
  double acc = 0.0;
  for (std::size_t x = 0; x < world.n_prompts(); ++x) {
    const double px = world.prompt_dist()[x];
    for (std::size_t y = 0; y < world.n_responses(); ++y) {
      const GeneratorValues v = generator.values(g.clamped(x, y));
      acc += px * world.p_plus()(x, y) * (-v.f + v.df * g.clamped(x, y));
      acc -= px * world.p_minus()(x, y) * v.df;
    }
  }
  return acc;
}

PopulationBregObjective::PopulationBregObjective(FiniteWorld world, ConvexGenerator generator,
                                                 double clamp_epsilon)
    : world_(std::move(world)),
      p_ref_(reference_distribution(world_)),
      g_star_(g_star(world_)),
      generator_(generator),
      clamp_epsilon_(clamp_epsilon) {}

Evaluation PopulationBregObjective::evaluate(const TabularPolicy& policy) const {
  const double t = world_.t();
  const GThetaField g = g_theta(policy, p_ref_, t, clamp_epsilon_);
  Evaluation out;
  out.gradient = Matrix(policy.n_prompts(), policy.n_responses());
  out.telemetry = telemetry_of(g, policy, p_ref_, t);
  for (std::size_t x = 0; x < world_.n_prompts(); ++x) {
    const double px = world_.prompt_dist()[x];
    for (std::size_t y = 0; y < world_.n_responses(); ++y) {
      if (!g_star_.defined(x, y)) {
        continue;
      }
      const double weight = px * world_.p_plus()(x, y);
      const double gt = g.clamped(x, y);
      const double gs = g_star_(x, y);
      out.loss += weight * bregman_divergence(generator_, gt, gs);
      if (g.raw(x, y) >= clamp_epsilon_) {
        // ∂Breg(g || g*)/∂g = f''(g) (g - g*)
        const double dl_dg = weight * generator_.deriv2(gt) * (gt - gs);
        add_grad_log_prob(policy, x, y, dl_dg * dg_dlogp(policy, p_ref_, t, x, y), out.gradient);
      }
    }
  }
  return out;
}

std::string PopulationBregObjective::name() const {
  return "population-" + std::string(generator_.name());
}

// --- empirical --------------------------------------------------------------

Evaluation evaluate_loss(const LossSpec& spec, const TabularPolicy& policy, const CellWeights& w,
                         const Matrix& p_ref) {
  spec.validate();
  check_shapes(policy, p_ref, w);
  const GThetaField g = g_theta(policy, p_ref, spec.t, spec.clamp_epsilon);
  const double gamma_grad = spec.kl_in_gradient ? spec.gamma : 0.0;

  Evaluation out;
  out.gradient = Matrix(policy.n_prompts(), policy.n_responses());
  out.telemetry = telemetry_of(g, policy, p_ref, spec.t);

  double main_sum = 0.0;
  double kl_sum = 0.0;
  for (std::size_t x = 0; x < p_ref.rows(); ++x) {
    for (std::size_t y = 0; y < p_ref.cols(); ++y) {
      const double wp = w.plus(x, y);
      const double wm = w.minus(x, y);
      if (wp == 0.0 && wm == 0.0) {
        continue;
      }
      const double gv = g.clamped(x, y);
      double dl_dg = 0.0;
      if (wp != 0.0) {
        const Term term = plus_term(spec, gv);
        main_sum += wp * term.main;
        kl_sum += wp * term.kl;
        dl_dg += wp * (term.main_dg + gamma_grad * term.kl_dg);
      }
      if (wm != 0.0) {
        const Term term = minus_term(spec, gv);
        main_sum += wm * term.main;
        kl_sum += wm * term.kl;
        dl_dg += wm * (term.main_dg + gamma_grad * term.kl_dg);
      }
      if (g.raw(x, y) >= spec.clamp_epsilon) {
        add_grad_log_prob(policy, x, y, dl_dg * dg_dlogp(policy, p_ref, spec.t, x, y),
                          out.gradient);
      }
    }
  }
  out.loss = spec.form == LossForm::bregman ? main_sum : main_sum + spec.gamma * kl_sum;
  return out;
}

double empirical_breg_loss(const TabularPolicy& policy, const UnpairedDataset& data,
                           const Matrix& p_ref, const ConvexGenerator& generator, double t,
                           double clamp_epsilon) {
  LossSpec spec;
  spec.generator = generator;
  spec.form = LossForm::bregman;
  spec.t = t;
  spec.clamp_epsilon = clamp_epsilon;
  return evaluate_loss(spec, policy, cell_weights(data), p_ref).loss;
}

double empirical_ddro_loss(const TabularPolicy& policy, const UnpairedDataset& data,
                           const Matrix& p_ref, const LossSpec& spec) {
  LossSpec s = spec;
  s.form = LossForm::ddro;
  return evaluate_loss(s, policy, cell_weights(data), p_ref).loss;
}

double practical_ddro_loss(const TabularPolicy& policy, const UnpairedDataset& data,
                           const Matrix& p_ref, const LossSpec& spec) {
  LossSpec s = spec;
  s.form = LossForm::practical;
  return evaluate_loss(s, policy, cell_weights(data), p_ref).loss;
}

Matrix loss_gradient(const LossSpec& spec, const TabularPolicy& policy,
                     const UnpairedDataset& data, const Matrix& p_ref) {
  return evaluate_loss(spec, policy, cell_weights(data), p_ref).gradient;
}

std::vector<double> per_sample_gradient_norms(const LossSpec& spec, const TabularPolicy& policy,
                                              const UnpairedDataset& data, const Matrix& p_ref) {
  spec.validate();
  data.validate();
  const GThetaField g = g_theta(policy, p_ref, spec.t, spec.clamp_epsilon);
  const double gamma_grad = spec.kl_in_gradient ? spec.gamma : 0.0;

  // Samples in one cell share a gradient; compute each cell once.
  const std::size_t cols = p_ref.cols();
  std::vector<double> plus_cache(p_ref.size(), -1.0);
  std::vector<double> minus_cache(p_ref.size(), -1.0);

  auto norm_for = [&](const Sample& s, bool plus) {
    auto& cache = plus ? plus_cache : minus_cache;
    double& slot = cache[s.prompt * cols + s.response];
    if (slot < 0.0) {
      if (g.raw(s.prompt, s.response) < spec.clamp_epsilon) {
        slot = 0.0;
      } else {
        const double gv = g.clamped(s.prompt, s.response);
        const Term term = plus ? plus_term(spec, gv) : minus_term(spec, gv);
        const double dl_dg = term.main_dg + gamma_grad * term.kl_dg;
        slot = std::abs(dl_dg * dg_dlogp(policy, p_ref, spec.t, s.prompt, s.response)) *
               grad_log_prob_norm(policy, s.prompt, s.response);
      }
    }
    return slot;
  };

  std::vector<double> norms;
  norms.reserve(data.plus.size() + data.minus.size());
  for (const Sample& s : data.plus) {
    norms.push_back(norm_for(s, true));
  }
  for (const Sample& s : data.minus) {
    norms.push_back(norm_for(s, false));
  }
  return norms;
}

EmpiricalObjective::EmpiricalObjective(UnpairedDataset data, Matrix p_ref, LossSpec spec)
    : data_(std::move(data)), p_ref_(std::move(p_ref)), spec_(spec) {
  spec_.validate();
  weights_ = cell_weights(data_);
}

Evaluation EmpiricalObjective::evaluate(const TabularPolicy& policy) const {
  return evaluate_loss(spec_, policy, weights_, p_ref_);
}

Evaluation EmpiricalObjective::evaluate_minibatch(const TabularPolicy& policy, CounterRng& rng,
                                                  std::size_t batch_size) const {
  const std::size_t half = std::max<std::size_t>(1, batch_size / 2);
  UnpairedDataset batch;
  batch.n_prompts = data_.n_prompts;
  batch.n_responses = data_.n_responses;
  batch.plus.reserve(half);
  batch.minus.reserve(half);
  for (std::size_t i = 0; i < half; ++i) {
    batch.plus.push_back(data_.plus[rng.below(data_.plus.size())]);
    batch.minus.push_back(data_.minus[rng.below(data_.minus.size())]);
  }
  return evaluate_loss(spec_, policy, cell_weights(batch), p_ref_);
}

std::string EmpiricalObjective::name() const {
  std::string n(loss_form_name(spec_.form));
  if (spec_.form == LossForm::practical) {
    n += "-" + std::string(spec_.smoothing.name());
  } else {
    n += "-" + std::string(spec_.generator.name());
  }
  return n;
}

}  // namespace ddro
