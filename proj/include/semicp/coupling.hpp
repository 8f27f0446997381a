#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "semicp/aux_chains.hpp"
#include "semicp/chain.hpp"

namespace semicp {

/// (b1, g1) dominates (b2, g2) iff b1 >= b2 and b1 + g1 >= b2 + g2.
constexpr bool dominates(const Counts& s1, const Counts& s2) noexcept {
  return s1.b >= s2.b && s1.s() >= s2.s();
}

struct PairState {
  Counts s1;
  Counts s2;
  friend bool operator==(const PairState&, const PairState&) = default;
};

/// One row of a joint generator: both coordinates jump simultaneously at `rate`.
/// For the two-chain coupling the deltas are (db, dg); for the domination
/// coupling they are (db, ds) with s = b + g.
struct JointRateRow {
  Eigen::Vector2i delta1;
  Eigen::Vector2i delta2;
  double rate;
};

enum class CouplingVariant { Verbatim, Repaired };

const char* to_string(CouplingVariant v);

/// Joint rates of the monotone coupling. Verbatim is the classical 11-row
/// table. Repaired additionally moves m = min(b1 - b2, (g2 - g1)^+) of the
/// lone chain-1 whole-recovery mass onto a joint row paired with a chain-2
/// semi-recovery, taking the same m out of the lone chain-2 semi-recovery
/// row; marginals are unchanged. Requires valid states with b1 >= b2.
std::vector<JointRateRow> coupling_rates(const PairState& pair, const ModelParams& p,
                                         CouplingVariant variant);

struct OrderViolation {
  double time;
  PairState pair;
};

struct CoupledRun {
  std::vector<double> times;
  std::vector<PairState> states;
  std::vector<OrderViolation> violations;
  PairState final_pair;
};

/// Event-driven simulation of the joint chain until `horizon` (or until both
/// chains sit at (0,0)). Order violations are logged after each event, not
/// fatal. Requires dominates(s1, s2) at t = 0.
CoupledRun simulate_coupled(const PairState& init, const ModelParams& p, double horizon,
                            CouplingVariant variant, RngStream& rng, bool record_path = true);

struct MarginalReport {
  RateVector projected1, projected2;
  RateVector expected1, expected2;
  std::vector<std::string> mismatches;

  bool consistent() const { return mismatches.empty(); }
};

/// Projects every joint row onto each chain and compares against
/// transition_rates. Sums are compared to a relative 1e-12 (the rows are
/// products of the same integers, so only the last few ulps can differ).
MarginalReport marginal_consistency(const PairState& pair, const ModelParams& p,
                                    CouplingVariant variant);

/// s2 uniform over valid states, then s1 uniform over valid states dominating s2.
PairState random_ordered_pair(int n, RngStream& rng);

/// Uniform over {(b, g) : b, g >= 0, b + g <= n}.
Counts random_counts(int n, RngStream& rng);

/// True chain in (b, s) coordinates together with the minorant (bhat, shat).
struct DominationState {
  std::int64_t b;
  std::int64_t s;
  std::int64_t bhat;
  std::int64_t shat;

  bool dominated() const { return b >= bhat && s >= shat; }
  friend bool operator==(const DominationState&, const DominationState&) = default;
};

/// True iff (b, s - b) / n lies in the design box.
bool in_design_box(const SurvivalDesign& d, int n, std::int64_t b, std::int64_t s);

/// The eight rows of the domination coupling, deltas in (b, s) coordinates.
/// Throws RegionExit when the chain is outside the box (residual rates would
/// go negative).
std::vector<JointRateRow> domination_rates(std::int64_t b, std::int64_t s, const SurvivalDesign& d,
                                           int n);

struct DominationRun {
  std::vector<double> times;
  std::vector<DominationState> states;
  std::optional<double> gamma;  ///< time of the event that left the box
  std::vector<std::pair<double, DominationState>> violations;
};

/// Both coordinates start at (floor(n b0), floor(n (b0 + g0))).
DominationState domination_initial(const SurvivalDesign& d, int n);

/// Runs the joint chain until `horizon` or until the true chain exits the box.
/// Requires init.b == init.bhat, init.s == init.shat, and init inside the box.
DominationRun simulate_domination(const DominationState& init, const SurvivalDesign& d, int n,
                                  double horizon, RngStream& rng);

}  // namespace semicp
