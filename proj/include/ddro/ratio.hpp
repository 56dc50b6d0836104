#pragma once

#include <cstddef>
#include <vector>

#include "ddro/matrix.hpp"
#include "ddro/policy.hpp"
#include "ddro/world.hpp"

namespace ddro {

inline constexpr double kDefaultClampEpsilon = 1e-6;

// A density-ratio field evaluated on the prompt x response grid. Entries
// outside the mask carry NaN.
struct RatioField {
  Matrix values;
  std::vector<bool> mask;  // row-major, same layout as values

  bool defined(std::size_t x, std::size_t y) const { return mask[x * values.cols() + y]; }
  double operator()(std::size_t x, std::size_t y) const { return values(x, y); }
};

// g* = p- / p+ on supp(p+).
RatioField g_star(const FiniteWorld& world);

// r* = p_ref / p+ on supp(p+).
RatioField r_star(const FiniteWorld& world);

// g_θ = p_ref / ((1 - t) p_θ) - t / (1 - t), clamped below at epsilon.
struct GThetaField {
  RatioField clamped;  // mask is all-true
  Matrix raw;
  std::size_t clamp_hits = 0;
  double min_clamped = 0.0;
  double max_clamped = 0.0;
};

GThetaField g_theta(const TabularPolicy& policy, const Matrix& p_ref, double t,
                    double epsilon = kDefaultClampEpsilon);

// Raw g_θ at a single cell, unclamped.
double g_theta_at(const TabularPolicy& policy, const Matrix& p_ref, double t, std::size_t x,
                  std::size_t y);

// p̃_θ = p_ref / (1 - t) - t p_θ / (1 - t). May be negative; rows sum to one.
Matrix tilde_p(const TabularPolicy& policy, const Matrix& p_ref, double t);

// Σ_{x,y} max(0, -p̃_θ(y|x)) averaged over prompts.
double tilde_negativity_mass(const Matrix& tilde);

}  // namespace ddro
