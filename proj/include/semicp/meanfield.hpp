#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "semicp/errors.hpp"

namespace semicp {

/// Fractions (b, g) of wholly- and semi-infected vertices.
template <class Scalar>
using OdeStateT = Eigen::Matrix<Scalar, 2, 1>;
using OdeState = OdeStateT<double>;

inline constexpr double kRegionTol = 1e-9;
inline constexpr double kDefaultOdeStep = 1e-3;

/// Mean-field vector field:
///   db/dt = -b + lambda b g
///   dg/dt = -g - lambda b g + lambda b (1 - b - g)
template <class Derived>
OdeStateT<typename Derived::Scalar> vector_field(const Eigen::MatrixBase<Derived>& x,
                                                 typename Derived::Scalar lambda) {
  using S = typename Derived::Scalar;
  const S b = x(0);
  const S g = x(1);
  const S bg = lambda * b * g;
  return {-b + bg, -g - bg + lambda * b * (S(1) - b - g)};
}

/// True iff x lies in {b >= 0, g >= 0, b + g <= 1} up to tol.
template <class Derived>
bool in_simplex(const Eigen::MatrixBase<Derived>& x, double tol = kRegionTol) {
  return x(0) >= -tol && x(1) >= -tol && x(0) + x(1) <= 1 + tol;
}

template <class Scalar>
struct OdePathT {
  Scalar step;
  Scalar t_end;
  std::vector<OdeStateT<Scalar>> states;

  Scalar time(std::size_t k) const {
    return k + 1 == states.size() ? t_end : step * static_cast<Scalar>(k);
  }
  /// Linear interpolation between grid states; clamps outside [0, t_end].
  OdeStateT<Scalar> at(Scalar t) const {
    if (t <= 0) return states.front();
    if (t >= t_end) return states.back();
    const Scalar pos = t / step;
    auto k = static_cast<std::size_t>(pos);
    if (k + 1 >= states.size()) return states.back();
    const Scalar w = pos - static_cast<Scalar>(k);
    return (Scalar(1) - w) * states[k] + w * states[k + 1];
  }
};
using OdePath = OdePathT<double>;

/// One classical fourth-order Runge-Kutta step.
template <class Scalar>
OdeStateT<Scalar> rk4_step(const OdeStateT<Scalar>& x, Scalar lambda, Scalar h) {
  const OdeStateT<Scalar> k1 = vector_field(x, lambda);
  const OdeStateT<Scalar> k2 = vector_field((x + (h / 2) * k1).eval(), lambda);
  const OdeStateT<Scalar> k3 = vector_field((x + (h / 2) * k2).eval(), lambda);
  const OdeStateT<Scalar> k4 = vector_field((x + h * k3).eval(), lambda);
  return x + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4);
}

/// Fixed-step RK4 from `init` to `t_end`. The grid has ceil(t_end/step)
/// intervals of equal length (exactly `step` when step divides t_end), so the
/// last state sits at t_end. Throws IntegrationError if a state leaves the
/// simplex by more than kRegionTol.
template <class Scalar>
OdePathT<Scalar> integrate(const OdeStateT<Scalar>& init, Scalar lambda, Scalar t_end,
                           Scalar step = Scalar(kDefaultOdeStep)) {
  if (!(lambda > 0)) throw DomainError("integrate: lambda must be positive");
  if (!(t_end > 0)) throw DomainError("integrate: t_end must be positive");
  if (!(step > 0) || step > Scalar(1e-2)) throw DomainError("integrate: step must lie in (0, 1e-2]");
  if (!in_simplex(init, 0.0)) throw DomainError("integrate: initial state outside the simplex");

  using std::ceil;
  using std::round;
  using std::abs;
  const Scalar ratio = t_end / step;
  auto intervals = static_cast<std::size_t>(
      abs(ratio - round(ratio)) <= Scalar(1e-9) * ratio ? round(ratio) : ceil(ratio));
  if (intervals == 0) intervals = 1;

  OdePathT<Scalar> path{t_end / static_cast<Scalar>(intervals), t_end, {}};
  path.states.reserve(intervals + 1);
  path.states.push_back(init);
  OdeStateT<Scalar> x = init;
  for (std::size_t k = 0; k < intervals; ++k) {
    x = rk4_step(x, lambda, path.step);
    if (!in_simplex(x))
      throw IntegrationError("integrate: state left the simplex at step " + std::to_string(k + 1));
    path.states.push_back(x);
  }
  return path;
}

/// Zeros of the vector field, sorted by b. `critical` flags the double root.
struct EquilibriumSet {
  std::vector<OdeState> points;
  bool critical = false;
};

EquilibriumSet equilibria(double lambda);

/// g_star = max over b in [0,1] of lambda b (1-b) / (2 lambda b + 1), the
/// largest g at which dg/dt can be nonnegative; g_tilde = (1/lambda + g_star)/2.
struct DecayEnvelope {
  double g_star;
  double g_star_argmax;
  double g_tilde;
};

DecayEnvelope decay_envelope_params(double lambda);

struct EnvelopeBound {
  double b_bound;
  double g_bound;
};

/// Subcritical bounds on the solution started at (1, 0):
///   b_t <= exp((lambda g_tilde - 1) t)
///   g_t <= (exp((lambda g_tilde - 1) t) - exp(-t)) / g_tilde
/// Throws DomainError for lambda >= 4.
EnvelopeBound decay_envelope(double lambda, double t);

}  // namespace semicp
