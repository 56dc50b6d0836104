#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "ddro/matrix.hpp"
#include "ddro/objective.hpp"
#include "ddro/policy.hpp"
#include "ddro/ratio.hpp"
#include "ddro/world.hpp"

namespace ddro {

enum class GeneratorKind { logistic, quadratic, kl };

struct GeneratorValues {
  double f = 0.0;
  double df = 0.0;
  double d2f = 0.0;
};

// Strictly convex f selecting a Bregman divergence.
//   logistic   f(u) = u log u - (1 + u) log(1 + u)   u > 0
//   quadratic  f(u) = (u - 1)^2 / 2                  u in R   (LSIF)
//   kl         f(u) = u log u                        u > 0    (KLIEP)
// An optional affine term a u + b is carried so shift invariance of the
// divergence can be exercised; it never changes f''.
class ConvexGenerator {
 public:
  explicit ConvexGenerator(GeneratorKind kind = GeneratorKind::logistic) : kind_(kind) {}

  GeneratorKind kind() const { return kind_; }
  std::string_view name() const;

  bool in_domain(double u) const;
  double eval(double u) const;
  double deriv(double u) const;
  double deriv2(double u) const;
  GeneratorValues values(double u) const;

  // inf of f'' over [lo, hi]; f'' is monotone for every shipped kind so
  // the infimum sits at an endpoint.
  double min_second_derivative(double lo, double hi) const;

  ConvexGenerator with_affine_shift(double slope, double offset) const;

 private:
  void require_domain(double u) const;

  GeneratorKind kind_;
  double slope_ = 0.0;
  double offset_ = 0.0;
};

GeneratorKind parse_generator(std::string_view name);

// (f, f', f'') at u. Throws InvalidArgument outside the domain.
GeneratorValues generator_eval(GeneratorKind kind, double u);

// Breg_f(g || g_tilde) = f(g_tilde) - f(g) - f'(g) (g_tilde - g).
double bregman_divergence(const ConvexGenerator& generator, double g, double g_tilde);

enum class SmoothingKind { identity, sig, logsig, neglogsigneg };

// Monotone map applied per sample in the practical loss.
//   identity      S(x) = x
//   sig           S(x) = σ(x)
//   logsig        S(x) = log σ(x)
//   neglogsigneg  S(x) = -log σ(-x)
struct SmoothingFn {
  SmoothingKind kind = SmoothingKind::logsig;

  double eval(double x) const;
  double deriv(double x) const;
  std::string_view name() const;
};

SmoothingKind parse_smoothing(std::string_view name);
inline constexpr SmoothingKind kAllSmoothings[] = {SmoothingKind::identity, SmoothingKind::sig,
                                                   SmoothingKind::logsig,
                                                   SmoothingKind::neglogsigneg};

double sigmoid(double x);
// log σ(x), stable for large |x|.
double log_sigmoid(double x);

// Which empirical risk a LossSpec evaluates.
//   bregman    Σ+ (-f(g) + f'(g) g)/n+  -  Σ- f'(g)/n-
//   ddro       bregman plus the printed γ terms:  +γ t g⁻¹ log g on D+,
//              and -γ (1-t) g⁻¹ log g on D- (inside the subtracted sum)
//   practical  Σ+ S(log(1+g))/n+  +  Σ- S(log(1+g⁻¹))/n-  with the same γ
//              terms both entering with a plus sign. The generator is not
//              used; the form is the smoothed logistic loss.
enum class LossForm { bregman, ddro, practical };

LossForm parse_loss_form(std::string_view name);
std::string_view loss_form_name(LossForm form);

struct LossSpec {
  ConvexGenerator generator{GeneratorKind::logistic};
  LossForm form = LossForm::practical;
  double t = 0.5;
  double gamma = 0.0;
  SmoothingFn smoothing{SmoothingKind::logsig};
  bool kl_in_gradient = false;
  double clamp_epsilon = kDefaultClampEpsilon;

  // Throws InvalidArgument: gamma < 0, t outside (0, 1), epsilon <= 0.
  void validate() const;
};

// Normalized per-cell sample weights: plus(x, y) = #{(x,y) in D+} / n+.
struct CellWeights {
  Matrix plus;
  Matrix minus;
};

CellWeights cell_weights(const UnpairedDataset& data);

// --- population risk -------------------------------------------------------

// E_{x~p_x, y~p+}[ Breg_f(g_θ || g*) ] over supp(p+), g_θ clamped at epsilon.
double population_breg_loss(const TabularPolicy& policy, const FiniteWorld& world,
                            const ConvexGenerator& generator,
                            double clamp_epsilon = kDefaultClampEpsilon);

// E_{p+}[-f(g_θ) + f'(g_θ) g_θ] - E_{p-}[f'(g_θ)], the population value the
// empirical Bregman risk estimates (population_breg_loss minus E_{p+} f(g*)).
double population_risk_terms(const TabularPolicy& policy, const FiniteWorld& world,
                             const ConvexGenerator& generator,
                             double clamp_epsilon = kDefaultClampEpsilon);

class PopulationBregObjective : public Objective {
 public:
  PopulationBregObjective(FiniteWorld world, ConvexGenerator generator,
                          double clamp_epsilon = kDefaultClampEpsilon);

  Evaluation evaluate(const TabularPolicy& policy) const override;
  std::string name() const override;

 private:
  FiniteWorld world_;
  Matrix p_ref_;
  RatioField g_star_;
  ConvexGenerator generator_;
  double clamp_epsilon_;
};

// --- empirical risks --------------------------------------------------------

double empirical_breg_loss(const TabularPolicy& policy, const UnpairedDataset& data,
                           const Matrix& p_ref, const ConvexGenerator& generator, double t,
                           double clamp_epsilon = kDefaultClampEpsilon);

// spec.form is overridden to ddro / practical respectively.
double empirical_ddro_loss(const TabularPolicy& policy, const UnpairedDataset& data,
                           const Matrix& p_ref, const LossSpec& spec);
double practical_ddro_loss(const TabularPolicy& policy, const UnpairedDataset& data,
                           const Matrix& p_ref, const LossSpec& spec);

// Loss of spec.form with gradient and telemetry. When spec.kl_in_gradient
// is false the γ terms are reported in the loss but not differentiated.
// Gradient flows to zero through clamped g_θ entries.
Evaluation evaluate_loss(const LossSpec& spec, const TabularPolicy& policy, const CellWeights& w,
                         const Matrix& p_ref);

Matrix loss_gradient(const LossSpec& spec, const TabularPolicy& policy,
                     const UnpairedDataset& data, const Matrix& p_ref);

// ‖∂ℓ_i/∂θ‖₂ for every sample, D+ first then D-, where ℓ_i is the sample's
// own term of spec.form (γ terms included only when kl_in_gradient).
std::vector<double> per_sample_gradient_norms(const LossSpec& spec, const TabularPolicy& policy,
                                              const UnpairedDataset& data, const Matrix& p_ref);

class EmpiricalObjective : public Objective {
 public:
  EmpiricalObjective(UnpairedDataset data, Matrix p_ref, LossSpec spec);

  Evaluation evaluate(const TabularPolicy& policy) const override;
  Evaluation evaluate_minibatch(const TabularPolicy& policy, CounterRng& rng,
                                std::size_t batch_size) const override;
  std::string name() const override;

  const LossSpec& spec() const { return spec_; }
  const UnpairedDataset& data() const { return data_; }
  const Matrix& p_ref() const { return p_ref_; }

 private:
  UnpairedDataset data_;
  Matrix p_ref_;
  LossSpec spec_;
  CellWeights weights_;
};

}  // namespace ddro
