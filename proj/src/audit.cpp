#include "ddro/audit.hpp"

#include <algorithm>
#include <cmath>

#include "ddro/baselines.hpp"
#include "ddro/error.hpp"
#include "ddro/losses.hpp"
#include "ddro/optimizer.hpp"
#include "ddro/ratio.hpp"
#include "ddro/rng.hpp"

namespace ddro {

FiniteWorld random_world(std::size_t n_prompts, std::size_t n_responses, double t,
                         std::uint64_t seed) {
  CounterRng rng = CounterRng::stream(seed, 0, "audit/world");
  auto random_rows = [&](std::size_t rows, std::size_t cols) {
    Matrix m(rows, cols);
    for (std::size_t x = 0; x < rows; ++x) {
      double total = 0.0;
      for (double& v : m.row(x)) {
        v = 0.1 + rng.uniform();
        total += v;
      }
      for (double& v : m.row(x)) {
        v /= total;
      }
    }
    return m;
  };
  Matrix plus = random_rows(n_prompts, n_responses);
  Matrix minus = random_rows(n_prompts, n_responses);
  Matrix px = random_rows(1, n_prompts);
  return build_distribution_world(std::move(plus), std::move(minus), t,
                                  std::vector<double>(px.row(0).begin(), px.row(0).end()));
}

TabularPolicy random_policy_near_reference(const FiniteWorld& world, double scale,
                                           std::uint64_t seed, double min_g) {
  const Matrix p_ref = reference_distribution(world);
  const TabularPolicy ref = init_from_reference(world);
  const double t = world.t();
  CounterRng rng = CounterRng::stream(seed, 0, "audit/policy");
  for (int attempt = 0; attempt < 1000; ++attempt) {
    Matrix logits = ref.logits();
    for (double& v : logits.flat()) {
      v += scale * (2.0 * rng.uniform() - 1.0);
    }
    TabularPolicy candidate(std::move(logits));
    const GThetaField g = g_theta(candidate, p_ref, t);
    bool ok = true;
    for (double v : g.raw.flat()) {
      ok = ok && v > min_g;
    }
    if (ok) {
      return candidate;
    }
    scale *= 0.9;
  }
  throw Error("could not draw an in-domain policy");
}

std::vector<AuditVariant> audit_variants(const FiniteWorld& world, std::uint64_t seed,
                                         std::size_t n_samples) {
  const Matrix p_ref = reference_distribution(world);
  const UnpairedDataset data = sample_unpaired(world, n_samples, n_samples, seed);
  const PairedDataset pairs = sample_paired(world, n_samples, seed + 1);
  std::vector<AuditVariant> out;

  const GeneratorKind generators[] = {GeneratorKind::logistic, GeneratorKind::quadratic,
                                      GeneratorKind::kl};
  for (GeneratorKind k : generators) {
    const ConvexGenerator gen(k);
    out.push_back({"population-" + std::string(gen.name()),
                   std::make_unique<PopulationBregObjective>(world, gen)});
    LossSpec spec;
    spec.generator = gen;
    spec.t = world.t();
    spec.form = LossForm::bregman;
    out.push_back({"bregman-" + std::string(gen.name()),
                   std::make_unique<EmpiricalObjective>(data, p_ref, spec)});
    for (double gamma : {0.0, 0.1}) {
      spec.form = LossForm::ddro;
      spec.gamma = gamma;
      spec.kl_in_gradient = true;
      out.push_back({"ddro-" + std::string(gen.name()) + (gamma == 0.0 ? "-gamma0" : "-gamma0.1"),
                     std::make_unique<EmpiricalObjective>(data, p_ref, spec)});
    }
  }
  for (SmoothingKind s : kAllSmoothings) {
    for (double gamma : {0.0, 0.1}) {
      LossSpec spec;
      spec.form = LossForm::practical;
      spec.t = world.t();
      spec.smoothing.kind = s;
      spec.gamma = gamma;
      spec.kl_in_gradient = true;
      out.push_back({"practical-" + std::string(spec.smoothing.name()) +
                         (gamma == 0.0 ? "-gamma0" : "-gamma0.1"),
                     std::make_unique<EmpiricalObjective>(data, p_ref, spec)});
    }
  }
  for (BaselineMethod m : kAllBaselines) {
    out.push_back({std::string(baseline_name(m)),
                   std::make_unique<PairObjective>(
                       PairObjective::baseline(pairs, p_ref, world.t(), m, 0.1))});
  }
  if (world.t() == 0.5) {
    out.push_back({"ddro-simplified", std::make_unique<PairObjective>(
                                          PairObjective::simplified_ddro(pairs, p_ref))});
  }
  return out;
}

std::vector<AuditResult> gradient_audit(const FiniteWorld& world, std::size_t points,
                                        std::uint64_t seed, double step) {
  std::vector<AuditVariant> variants = audit_variants(world, seed);
  std::vector<AuditResult> results;
  for (const AuditVariant& v : variants) {
    AuditResult r{v.name, 0.0, points};
    for (std::size_t p = 0; p < points; ++p) {
      const TabularPolicy policy = random_policy_near_reference(world, 0.5, seed * 1000 + p);
      r.max_rel_error =
          std::max(r.max_rel_error, finite_difference_check(*v.objective, policy, step, 0));
    }
    results.push_back(std::move(r));
  }
  return results;
}

}  // namespace ddro
