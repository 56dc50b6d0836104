#pragma once

#include <cstddef>
#include <string>

#include "ddro/matrix.hpp"
#include "ddro/policy.hpp"
#include "ddro/rng.hpp"

namespace ddro {

// Per-evaluation diagnostics surfaced into TrainReport.
struct LossTelemetry {
  std::size_t clamp_hits = 0;
  double g_min = 0.0;  // realized range of clamped g_θ
  double g_max = 0.0;
  double tilde_neg_mass = 0.0;
};

struct Evaluation {
  double loss = 0.0;
  Matrix gradient;  // ∂loss/∂logits
  LossTelemetry telemetry;
};

// A differentiable scalar objective over the logits of a TabularPolicy.
class Objective {
 public:
  virtual ~Objective() = default;

  virtual Evaluation evaluate(const TabularPolicy& policy) const = 0;

  // Stochastic estimate on a resampled batch. Objectives without samples
  // ignore the batch request.
  virtual Evaluation evaluate_minibatch(const TabularPolicy& policy, CounterRng& rng,
                                        std::size_t batch_size) const {
    (void)rng;
    (void)batch_size;
    return evaluate(policy);
  }

  virtual double loss(const TabularPolicy& policy) const { return evaluate(policy).loss; }

  virtual std::string name() const = 0;
};

}  // namespace ddro
