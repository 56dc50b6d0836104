#include "ddro/ratio.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ddro/error.hpp"

namespace ddro {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_t(double t) {
  if (!(t > 0.0 && t < 1.0)) {
    throw InvalidArgument("t out of open interval (0, 1)");
  }
}

void check_shape(const TabularPolicy& policy, const Matrix& p_ref) {
  if (policy.n_prompts() != p_ref.rows() || policy.n_responses() != p_ref.cols()) {
    throw InvalidArgument("policy and reference shapes differ");
  }
}

RatioField ratio_over_plus(const FiniteWorld& world, const Matrix& numerator) {
  const Matrix& plus = world.p_plus();
  RatioField field{Matrix(plus.rows(), plus.cols(), kNaN),
                   std::vector<bool>(plus.size(), false)};
  for (std::size_t x = 0; x < plus.rows(); ++x) {
    for (std::size_t y = 0; y < plus.cols(); ++y) {
      if (plus(x, y) > 0.0) {
        field.values(x, y) = numerator(x, y) / plus(x, y);
        field.mask[x * plus.cols() + y] = true;
      }
    }
  }
  return field;
}

}  // namespace

RatioField g_star(const FiniteWorld& world) { return ratio_over_plus(world, world.p_minus()); }

RatioField r_star(const FiniteWorld& world) {
  return ratio_over_plus(world, reference_distribution(world));
}

double g_theta_at(const TabularPolicy& policy, const Matrix& p_ref, double t, std::size_t x,
                  std::size_t y) {
  const double p = std::max(policy.prob(x, y), kLogFloor);
  return p_ref(x, y) / ((1.0 - t) * p) - t / (1.0 - t);
}

GThetaField g_theta(const TabularPolicy& policy, const Matrix& p_ref, double t, double epsilon) {
  check_t(t);
  check_shape(policy, p_ref);
  GThetaField out;
  out.raw = Matrix(p_ref.rows(), p_ref.cols());
  out.clamped = RatioField{Matrix(p_ref.rows(), p_ref.cols()), std::vector<bool>(p_ref.size(), true)};
  out.min_clamped = std::numeric_limits<double>::infinity();
  out.max_clamped = -std::numeric_limits<double>::infinity();
  for (std::size_t x = 0; x < p_ref.rows(); ++x) {
    for (std::size_t y = 0; y < p_ref.cols(); ++y) {
      const double raw = g_theta_at(policy, p_ref, t, x, y);
      if (!std::isfinite(raw)) {
        throw InvalidArgument("non-finite g_theta");
      }
      out.raw(x, y) = raw;
      double c = raw;
      if (raw < epsilon) {
        c = epsilon;
        ++out.clamp_hits;
      }
      out.clamped.values(x, y) = c;
      out.min_clamped = std::min(out.min_clamped, c);
      out.max_clamped = std::max(out.max_clamped, c);
    }
  }
  return out;
}

Matrix tilde_p(const TabularPolicy& policy, const Matrix& p_ref, double t) {
  check_t(t);
  check_shape(policy, p_ref);
  Matrix out(p_ref.rows(), p_ref.cols());
  for (std::size_t x = 0; x < p_ref.rows(); ++x) {
    for (std::size_t y = 0; y < p_ref.cols(); ++y) {
      out(x, y) = (p_ref(x, y) - t * policy.prob(x, y)) / (1.0 - t);
    }
  }
  return out;
}

double tilde_negativity_mass(const Matrix& tilde) {
  if (tilde.rows() == 0) {
    return 0.0;
  }
  double mass = 0.0;
  for (double v : tilde.flat()) {
    if (v < 0.0) {
      mass -= v;
    }
  }
  return mass / static_cast<double>(tilde.rows());
}

}  // namespace ddro
