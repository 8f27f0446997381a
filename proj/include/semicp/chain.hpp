#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "semicp/errors.hpp"
#include "semicp/rng.hpp"

namespace semicp {

/// Population size and infection rate of one chain instance.
struct ModelParams {
  int n;
  double lambda;

  ModelParams(int n_, double lambda_);
};

/// Lumped state: b vertices wholly infected (spin 2), g semi-infected (spin 1).
struct Counts {
  int b = 0;
  int g = 0;

  constexpr int s() const noexcept { return b + g; }
  constexpr bool valid_for(const ModelParams& p) const noexcept {
    return b >= 0 && g >= 0 && b + g <= p.n;
  }
  friend constexpr bool operator==(const Counts&, const Counts&) = default;
};

/// (floor(n*b), floor(n*g)); a relative slack of 1e-12 absorbs representation
/// error so that e.g. 0.22 * 2000 maps to 440.
Counts counts_from_fractions(int n, double b, double g);

enum class EventKind : std::uint8_t { RecoverWhole = 0, RecoverSemi = 1, Promote = 2, Seed = 3 };

inline constexpr std::array<EventKind, 4> kEventOrder = {
    EventKind::RecoverWhole, EventKind::RecoverSemi, EventKind::Promote, EventKind::Seed};

/// (db, dg) of an event: (-1,0), (0,-1), (+1,-1), (0,+1).
Eigen::Vector2i event_delta(EventKind e);

const char* to_string(EventKind e);

struct RateVector {
  double recover_whole = 0;
  double recover_semi = 0;
  double promote = 0;
  double seed = 0;

  double operator[](EventKind e) const noexcept {
    switch (e) {
      case EventKind::RecoverWhole: return recover_whole;
      case EventKind::RecoverSemi: return recover_semi;
      case EventKind::Promote: return promote;
      case EventKind::Seed: return seed;
    }
    return 0;
  }
  double total() const noexcept { return recover_whole + recover_semi + promote + seed; }
};

/// (b, g, (lambda/n) b g, (lambda/n) b (n - b - g)). Throws DomainError on
/// invalid counts.
RateVector transition_rates(const Counts& c, const ModelParams& p);

/// Throws DomainError if the result would leave the valid state set
/// (negative entries, or b + g > n when params are given).
Counts apply_event(const Counts& c, EventKind e);
Counts apply_event(const Counts& c, EventKind e, const ModelParams& p);

struct StepResult {
  double dt;
  EventKind event;
  Counts next;
};

/// Chooses an index in [0, rates.size()) with probability rate/total by
/// scanning in order against u * total, u in (0,1]. Zero-rate entries are
/// never selected. Requires total > 0.
template <std::size_t N>
std::size_t select_by_rate(const std::array<double, N>& rates, double total, double u) {
  const double target = u * total;
  double cum = 0;
  std::size_t last_positive = N;
  for (std::size_t k = 0; k < N; ++k) {
    if (rates[k] <= 0) continue;
    cum += rates[k];
    last_positive = k;
    if (cum >= target) return k;
  }
  return last_positive;
}

/// One exact Gillespie step: dt from the first uniform, the event from the
/// second. Returns nullopt at (0,0), where every rate vanishes.
std::optional<StepResult> step(const Counts& c, const ModelParams& p, RngStream& rng);

/// Event-stamped path. With record_every = k > 1 only every k-th event is
/// kept (plus the first and last state); tau and censored stay exact.
struct Trajectory {
  std::vector<double> times;
  std::vector<Counts> states;
  std::optional<double> tau;
  bool censored = false;
  std::uint64_t seed_used = 0;
  std::uint64_t events = 0;

  const Counts& final_state() const { return states.back(); }
  /// Last recorded state at a time <= t.
  const Counts& state_at(double t) const;
};

struct SimOptions {
  std::size_t record_every = 1;
};

/// Runs the reduced chain from `init` until b hits 0 or the next event would
/// fall after `horizon`. `visit(t, before, after, event)` is called for every
/// applied event. Returns the stop time and whether b reached 0.
template <class Visitor>
std::pair<double, bool> run_chain(const ModelParams& p, Counts state, double horizon,
                                  RngStream& rng, Visitor&& visit) {
  double t = 0;
  while (state.b > 0) {
    auto res = step(state, p, rng);
    if (!res || t + res->dt > horizon) return {t, false};
    t += res->dt;
    visit(t, state, res->next, res->event);
    state = res->next;
  }
  return {t, true};
}

Trajectory simulate(const ModelParams& p, const Counts& init, double horizon, RngStream& rng,
                    const SimOptions& opts = {});

/// Per-vertex configuration over {0 healthy, 1 semi-infected, 2 wholly infected}.
struct FullConfiguration {
  std::vector<std::uint8_t> spins;

  static FullConfiguration from_counts(int n, const Counts& c);
  Counts counts() const;
};

inline constexpr int kMaxFullVertices = 1 << 16;

/// Sum of H over all vertices and target levels.
double full_total_rate(const FullConfiguration& cfg, const ModelParams& p);

/// Simulates the per-vertex process (each (vertex, level) pair is its own
/// exponential clock) and returns the lumped trajectory. Stops at b = 0 like
/// `simulate`. Throws CapacityError for n > 2^16.
Trajectory simulate_full(const ModelParams& p, const FullConfiguration& init, double horizon,
                         RngStream& rng);

}  // namespace semicp
