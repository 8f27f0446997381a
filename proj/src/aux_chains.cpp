#include "semicp/aux_chains.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

#include "semicp/chain.hpp"
#include "semicp/meanfield.hpp"

namespace semicp {

double default_beta(double lambda) { return 0.02 * (lambda - 4) / lambda; }

std::pair<double, double> pivot_point(double lambda, double beta) {
  if (!(lambda > 4)) throw InfeasibleDesign("pivot_point: survival design requires lambda > 4");
  if (!(beta > 0)) throw InfeasibleDesign("infeasible-beta: beta must be positive");
  const double b0 = (lambda - 2) / (2 * lambda);
  const double g0 = 1 / lambda + beta;
  if (!(b0 > 0 && g0 > 0 && b0 + g0 < 1))
    throw InfeasibleDesign("infeasible-beta: pivot outside the open simplex");
  const OdeState f = vector_field(OdeState(b0, g0), lambda);
  if (!(f(0) > 0 && f(1) > 0)) {
    std::ostringstream msg;
    msg << "infeasible-beta: vector field at pivot is (" << f(0) << ", " << f(1)
        << "), both components must be > 0";
    throw InfeasibleDesign(msg.str());
  }
  return {b0, g0};
}

std::optional<std::string> alpha_violation(double lambda, double b0, double g0, double alpha) {
  if (!(alpha > 0 && alpha < 1)) return "alpha must lie in (0, 1)";
  const double s0 = b0 + g0;
  auto interior = [](double b, double g) { return b > 0 && g > 0 && b + g < 1; };
  if (!interior((1 - alpha) * b0, (1 - alpha) * g0) || !interior((1 + alpha) * b0, (1 + alpha) * g0))
    return "scaled pivots (1 -+ alpha)(b0, g0) leave the open simplex";
  const double g_lo = (1 - alpha) * s0 - (1 + alpha) * b0;
  const double g_hi = (1 + alpha) * s0 - (1 - alpha) * b0;
  if (!(g_lo > 0 && g_hi > 0)) return "g_lo and g_hi must be positive";

  std::ostringstream msg;
  // Both sides of the first inequality carry the factor b0 > 0.
  const double promote_lo = lambda * (1 - alpha) * g_lo;
  const double recover_hi = 1 + alpha;
  if (!(promote_lo > recover_hi)) {
    msg << "infeasible-alpha: lambda(1-alpha)g_lo = " << promote_lo
        << " <= 1+alpha = " << recover_hi;
    return msg.str();
  }
  const double q1 = lambda * (1 - alpha) * b0 * (1 - (1 + alpha) * s0);
  const double rhs = g_hi + lambda * (1 + alpha) * b0 * g_hi;
  if (!(q1 > rhs)) {
    msg << "infeasible-alpha: lambda(1-alpha)b0[1-(1+alpha)(b0+g0)] = " << q1
        << " <= g_hi + lambda(1+alpha)b0 g_hi = " << rhs;
    return msg.str();
  }
  const double q2 = (1 + alpha) * b0 + g_hi;
  if (!(q1 > q2)) return "infeasible-alpha: q1 <= q2";
  return std::nullopt;
}

double box_l1_distance(const DesignBox& box, double b0, double g0) {
  auto dist = [&](double b, double g) { return std::abs(b - b0) + std::abs(g - g0); };
  // Each edge as a map from u in [0,1] to a point in (b, g).
  const std::array<std::function<double(double)>, 4> edges = {
      [&](double u) { const double s = box.s_min + u * (box.s_max - box.s_min); return dist(box.b_min, s - box.b_min); },
      [&](double u) { const double s = box.s_min + u * (box.s_max - box.s_min); return dist(box.b_max, s - box.b_max); },
      [&](double u) { const double b = box.b_min + u * (box.b_max - box.b_min); return dist(b, box.s_min - b); },
      [&](double u) { const double b = box.b_min + u * (box.b_max - box.b_min); return dist(b, box.s_max - b); },
  };

  constexpr int kGrid = 2000;
  const double inv_phi = (std::sqrt(5.0) - 1) / 2;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& f : edges) {
    int arg = 0;
    double edge_best = f(0.0);
    for (int k = 1; k <= kGrid; ++k) {
      const double v = f(static_cast<double>(k) / kGrid);
      if (v < edge_best) {
        edge_best = v;
        arg = k;
      }
    }
    // The distance is convex along an edge, so golden section converges on
    // the bracketing cells.
    double lo = std::max(0, arg - 1) / static_cast<double>(kGrid);
    double hi = std::min(kGrid, arg + 1) / static_cast<double>(kGrid);
    double x1 = hi - inv_phi * (hi - lo);
    double x2 = lo + inv_phi * (hi - lo);
    double f1 = f(x1);
    double f2 = f(x2);
    while (hi - lo > 1e-14) {
      if (f1 > f2) {
        lo = x1; x1 = x2; f1 = f2;
        x2 = lo + inv_phi * (hi - lo); f2 = f(x2);
      } else {
        hi = x2; x2 = x1; f2 = f1;
        x1 = hi - inv_phi * (hi - lo); f1 = f(x1);
      }
    }
    best = std::min({best, edge_best, f((lo + hi) / 2)});
  }
  return best;
}

namespace {

SurvivalDesign build_design(double lambda, double beta, double alpha, double b0, double g0) {
  SurvivalDesign d{};
  d.lambda = lambda;
  d.beta = beta;
  d.alpha = alpha;
  d.b0 = b0;
  d.g0 = g0;
  const double s0 = b0 + g0;
  d.g_lo = (1 - alpha) * s0 - (1 + alpha) * b0;
  d.g_hi = (1 + alpha) * s0 - (1 - alpha) * b0;
  d.box = {(1 - alpha) * b0, (1 + alpha) * b0, (1 - alpha) * s0, (1 + alpha) * s0};
  d.D = box_l1_distance(d.box, b0, g0);
  d.T4 = d.D / (4 * (1 + lambda));
  d.q1 = lambda * (1 - alpha) * b0 * (1 - (1 + alpha) * s0);
  d.q2 = (1 + alpha) * b0 + d.g_hi;
  d.rho = std::sqrt(d.q2 / d.q1);
  d.C6 = d.q1 + d.q2 - d.q1 * d.rho - d.q2 / d.rho;

  if (!(d.D > 0 && d.T4 > 0)) throw InfeasibleDesign("design_survival: D must be positive");
  if (!(d.q2 / d.q1 < d.rho && d.rho < 1)) throw InfeasibleDesign("design_survival: rho outside (q2/q1, 1)");
  if (!(d.C6 > 0)) throw InfeasibleDesign("design_survival: C6 must be positive");
  return d;
}

}  // namespace

SurvivalDesign design_survival(double lambda, std::optional<double> beta, std::optional<double> alpha) {
  if (!(lambda > 4)) throw InfeasibleDesign("design_survival: requires lambda > 4");
  const double bt = beta.value_or(default_beta(lambda));
  const auto [b0, g0] = pivot_point(lambda, bt);

  if (alpha) {
    if (auto why = alpha_violation(lambda, b0, g0, *alpha)) throw InfeasibleDesign(*why);
    return build_design(lambda, bt, *alpha, b0, g0);
  }
  for (int k = 0; k <= 20; ++k) {
    const double a = 0.5 * std::ldexp(1.0, -k);
    if (!alpha_violation(lambda, b0, g0, a)) return build_design(lambda, bt, a, b0, g0);
  }
  throw InfeasibleDesign("infeasible-design: no admissible alpha on the halving grid");
}

HatRates hat_rates(const SurvivalDesign& d, int n) {
  const double nn = n;
  return {nn * (1 + d.alpha) * d.b0, nn * d.g_hi, d.lambda * nn * (1 - d.alpha) * d.b0 * d.g_lo,
          nn * d.q1};
}

HatState hat_initial(const SurvivalDesign& d, int n) {
  const Counts c = counts_from_fractions(n, d.b0, d.g0);
  const Counts s = counts_from_fractions(n, d.b0 + d.g0, 0);
  return {c.b, s.b};
}

const HatState& HatTrajectory::state_at(double t) const {
  auto it = std::upper_bound(times.begin(), times.end(), t);
  return states[it == times.begin() ? 0 : static_cast<std::size_t>(it - times.begin()) - 1];
}

HatTrajectory simulate_hat(const SurvivalDesign& d, int n, double horizon, RngStream& rng) {
  if (n < 1) throw DomainError("simulate_hat: n must be >= 1");
  const HatRates r = hat_rates(d, n);
  const std::array<double, 4> rates = {r.d_joint, r.d_s, r.b_birth, r.s_birth};
  const double total = r.total();

  HatTrajectory traj;
  HatState x = hat_initial(d, n);
  traj.times.push_back(0.0);
  traj.states.push_back(x);
  if (!(horizon > 0)) return traj;
  double t = 0;
  while (true) {
    const double dt = rng.exponential(total);
    if (t + dt > horizon) break;
    t += dt;
    switch (select_by_rate(rates, total, rng.uniform_open_closed())) {
      case 0: --x.bhat; --x.shat; break;
      case 1: --x.shat; break;
      case 2: ++x.bhat; break;
      default: ++x.shat; break;
    }
    traj.times.push_back(t);
    traj.states.push_back(x);
  }
  return traj;
}

TildeParams::TildeParams(double theta_, std::int64_t n0_) : theta(theta_), n0(n0_) {
  if (!(theta > 0 && theta <= 1)) throw DomainError("TildeParams: theta must lie in (0, 1]");
  if (n0 < 0) throw DomainError("TildeParams: n0 must be nonnegative");
}

TildeRates tilde_rates(std::int64_t value, double theta) {
  if (value < 0) throw DomainError("tilde_rates: value must be nonnegative");
  if (!(theta > 0)) throw DomainError("tilde_rates: theta must be positive");
  const double v = static_cast<double>(value);
  return {v, theta * v / (theta + 3)};
}

std::int64_t TildeTrajectory::value_at(double t) const {
  auto it = std::upper_bound(times.begin(), times.end(), t);
  return values[it == times.begin() ? 0 : static_cast<std::size_t>(it - times.begin()) - 1];
}

TildeTrajectory simulate_tilde(const TildeParams& p, double horizon, RngStream& rng) {
  TildeTrajectory traj;
  std::int64_t v = p.n0;
  traj.times.push_back(0.0);
  traj.values.push_back(v);
  double t = 0;
  const double birth_share = p.theta / (p.theta + 3);
  // Total rate v (1 + theta/(theta+3)); a birth wins with probability
  // birth / total.
  const double birth_prob = birth_share / (1 + birth_share);
  while (v > 0) {
    const double dt = rng.exponential(static_cast<double>(v) * (1 + birth_share));
    if (t + dt > horizon) return traj;
    t += dt;
    if (rng.uniform_open_closed() <= 1 - birth_prob) --v;
    else ++v;
    traj.times.push_back(t);
    traj.values.push_back(v);
  }
  traj.extinction_time = t;
  return traj;
}

double tilde_mean(double t, std::int64_t n, double theta) {
  if (!(theta > 0)) throw DomainError("tilde_mean: theta must be positive");
  return static_cast<double>(n) * std::exp(-3 * t / (theta + 3));
}

double tilde_extinction_bound(std::int64_t n, double theta) {
  if (n < 1 || !(theta > 0)) throw DomainError("tilde_extinction_bound: needs n >= 1, theta > 0");
  return 1 - std::pow(static_cast<double>(n), -theta / (2 * theta + 6));
}

}  // namespace semicp
