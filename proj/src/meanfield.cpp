#include "semicp/meanfield.hpp"

#include <algorithm>
#include <cmath>

namespace semicp {

EquilibriumSet equilibria(double lambda) {
  if (!(lambda > 0)) throw DomainError("equilibria: lambda must be positive");
  EquilibriumSet set;
  set.points.emplace_back(0.0, 0.0);

  // db/dt = 0 with b > 0 forces g = 1/lambda; dg/dt = 0 then reduces to
  // lambda b^2 - (lambda - 2) b + 1/lambda = 0.
  const double disc = (lambda - 2) * (lambda - 2) - 4;
  const double g = 1.0 / lambda;
  if (std::abs(disc) <= 1e-12) {
    set.critical = true;
    set.points.emplace_back((lambda - 2) / (2 * lambda), g);
  } else if (disc > 0 && lambda > 2) {
    const double root = std::sqrt(disc);
    set.points.emplace_back((lambda - 2 - root) / (2 * lambda), g);
    set.points.emplace_back((lambda - 2 + root) / (2 * lambda), g);
  }
  std::sort(set.points.begin(), set.points.end(),
            [](const OdeState& a, const OdeState& b) { return a(0) < b(0); });
  return set;
}

namespace {

double dg_nullcline(double lambda, double b) { return lambda * b * (1 - b) / (2 * lambda * b + 1); }

}  // namespace

DecayEnvelope decay_envelope_params(double lambda) {
  if (!(lambda > 0)) throw DomainError("decay_envelope_params: lambda must be positive");

  constexpr int kGrid = 10000;
  int best = 0;
  double best_val = dg_nullcline(lambda, 0.0);
  for (int k = 1; k <= kGrid; ++k) {
    const double v = dg_nullcline(lambda, static_cast<double>(k) / kGrid);
    if (v > best_val) {
      best_val = v;
      best = k;
    }
  }

  // Golden-section refinement on the bracketing grid cells (unimodal there).
  double lo = std::max(0, best - 1) / static_cast<double>(kGrid);
  double hi = std::min(kGrid, best + 1) / static_cast<double>(kGrid);
  const double inv_phi = (std::sqrt(5.0) - 1) / 2;
  double x1 = hi - inv_phi * (hi - lo);
  double x2 = lo + inv_phi * (hi - lo);
  double f1 = dg_nullcline(lambda, x1);
  double f2 = dg_nullcline(lambda, x2);
  while (hi - lo > 1e-13) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = dg_nullcline(lambda, x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = dg_nullcline(lambda, x1);
    }
  }
  double arg = (lo + hi) / 2;
  double g_star = dg_nullcline(lambda, arg);
  if (best_val > g_star) {
    g_star = best_val;
    arg = static_cast<double>(best) / kGrid;
  }
  return {g_star, arg, (1.0 / lambda + g_star) / 2};
}

EnvelopeBound decay_envelope(double lambda, double t) {
  if (!(lambda > 0) || !(lambda < 4))
    throw DomainError("decay_envelope: only defined for 0 < lambda < 4");
  if (!(t >= 0)) throw DomainError("decay_envelope: t must be nonnegative");
  const double g_tilde = decay_envelope_params(lambda).g_tilde;
  const double e = std::exp((lambda * g_tilde - 1) * t);
  return {e, (e - std::exp(-t)) / g_tilde};
}

}  // namespace semicp
