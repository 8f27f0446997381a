#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "semicp/errors.hpp"
#include "semicp/rng.hpp"

namespace semicp {

/// Bounds of the box around the pivot, in (b, s = b + g) coordinates.
struct DesignBox {
  double b_min, b_max, s_min, s_max;

  bool contains(double b, double s, double tol = 0) const {
    return b >= b_min - tol && b <= b_max + tol && s >= s_min - tol && s <= s_max + tol;
  }
};

/// Constants of the supercritical survival construction for one
/// (lambda, beta, alpha):
///   pivot (b0, g0) = ((lambda-2)/(2 lambda), 1/lambda + beta)
///   box   (1 -+ alpha) b0 <= b <= (1 +- alpha) b0, same for b + g around b0 + g0
///   g_lo / g_hi = smallest / largest g inside the box
///   D = l1 distance from the pivot to the outside of the box, T4 = D / (4 (1 + lambda))
///   q1 / q2 = up / down rates (per vertex) of the minorant sum chain,
///   rho in (q2/q1, 1), C6 = q1 + q2 - q1 rho - q2 / rho.
struct SurvivalDesign {
  double lambda;
  double beta;
  double alpha;
  double b0;
  double g0;
  double g_lo;
  double g_hi;
  DesignBox box;
  double D;
  double T4;
  double q1;
  double q2;
  double rho;
  double C6;
};

/// 0.02 (lambda - 4) / lambda.
double default_beta(double lambda);

/// Throws InfeasibleDesign unless lambda > 4, beta > 0, the pivot is interior
/// to the simplex and both vector-field components are strictly positive there.
std::pair<double, double> pivot_point(double lambda, double beta);

/// Reason alpha is inadmissible for the pivot, or nullopt if it is admissible.
std::optional<std::string> alpha_violation(double lambda, double b0, double g0, double alpha);

/// Builds every constant. Without alpha, picks the largest admissible value on
/// {0.5 * 2^-k : k = 0..20}. Throws InfeasibleDesign on failure.
SurvivalDesign design_survival(double lambda, std::optional<double> beta = std::nullopt,
                               std::optional<double> alpha = std::nullopt);

/// l1 distance from the pivot to the boundary of the box, by grid scan plus
/// golden-section refinement along each of the four edges.
double box_l1_distance(const DesignBox& box, double b0, double g0);

/// Constant rates of the minorant walk (bhat, shat).
struct HatRates {
  double d_joint;  ///< (-1, -1)
  double d_s;      ///< ( 0, -1)
  double b_birth;  ///< (+1,  0)
  double s_birth;  ///< ( 0, +1)

  double total() const { return d_joint + d_s + b_birth + s_birth; }
};

HatRates hat_rates(const SurvivalDesign& d, int n);

struct HatState {
  std::int64_t bhat = 0;
  std::int64_t shat = 0;
  friend bool operator==(const HatState&, const HatState&) = default;
};

/// (floor(n b0), floor(n (b0 + g0))).
HatState hat_initial(const SurvivalDesign& d, int n);

struct HatTrajectory {
  std::vector<double> times;
  std::vector<HatState> states;

  const HatState& state_at(double t) const;
};

/// Unconstrained constant-rate walk from hat_initial; values may go negative.
HatTrajectory simulate_hat(const SurvivalDesign& d, int n, double horizon, RngStream& rng);

/// Parameters of the subcritical dominating chain: death at rate v, birth at
/// rate theta v / (theta + 3).
struct TildeParams {
  double theta;
  std::int64_t n0;

  TildeParams(double theta_, std::int64_t n0_);
};

struct TildeRates {
  double death;
  double birth;
};

TildeRates tilde_rates(std::int64_t value, double theta);

struct TildeTrajectory {
  std::vector<double> times;
  std::vector<std::int64_t> values;
  std::optional<double> extinction_time;

  std::int64_t value_at(double t) const;
};

TildeTrajectory simulate_tilde(const TildeParams& p, double horizon, RngStream& rng);

/// n exp(-3 t / (theta + 3)).
double tilde_mean(double t, std::int64_t n, double theta);

/// 1 - n^(-theta / (2 theta + 6)): guaranteed extinction probability by
/// time (1 + theta/2) ln n.
double tilde_extinction_bound(std::int64_t n, double theta);

}  // namespace semicp
