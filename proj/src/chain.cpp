#include "semicp/chain.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace semicp {

ModelParams::ModelParams(int n_, double lambda_) : n(n_), lambda(lambda_) {
  if (n < 1) throw DomainError("ModelParams: n must be >= 1, got " + std::to_string(n));
  if (!(lambda > 0) || !std::isfinite(lambda))
    throw DomainError("ModelParams: lambda must be positive and finite");
}

Counts counts_from_fractions(int n, double b, double g) {
  auto floor_frac = [n](double x) {
    const double v = static_cast<double>(n) * x;
    return static_cast<int>(std::floor(v + 1e-12 * std::max(1.0, std::abs(v))));
  };
  return {floor_frac(b), floor_frac(g)};
}

Eigen::Vector2i event_delta(EventKind e) {
  switch (e) {
    case EventKind::RecoverWhole: return {-1, 0};
    case EventKind::RecoverSemi: return {0, -1};
    case EventKind::Promote: return {1, -1};
    case EventKind::Seed: return {0, 1};
  }
  throw DomainError("event_delta: unknown event");
}

const char* to_string(EventKind e) {
  switch (e) {
    case EventKind::RecoverWhole: return "RecoverWhole";
    case EventKind::RecoverSemi: return "RecoverSemi";
    case EventKind::Promote: return "Promote";
    case EventKind::Seed: return "Seed";
  }
  return "?";
}

RateVector transition_rates(const Counts& c, const ModelParams& p) {
  if (!c.valid_for(p))
    throw DomainError("transition_rates: invalid counts (" + std::to_string(c.b) + "," +
                      std::to_string(c.g) + ") for n=" + std::to_string(p.n));
  const double k = p.lambda / p.n;
  const double b = c.b;
  const double g = c.g;
  return {b, g, k * b * g, k * b * static_cast<double>(p.n - c.b - c.g)};
}

Counts apply_event(const Counts& c, EventKind e) {
  // Only transitions with a positive rate are defined.
  bool ok = false;
  switch (e) {
    case EventKind::RecoverWhole: ok = c.b >= 1; break;
    case EventKind::RecoverSemi: ok = c.g >= 1; break;
    case EventKind::Promote: ok = c.b >= 1 && c.g >= 1; break;
    case EventKind::Seed: ok = c.b >= 1; break;
  }
  if (!ok || c.b < 0 || c.g < 0)
    throw DomainError(std::string("apply_event: ") + to_string(e) + " undefined at (" +
                      std::to_string(c.b) + "," + std::to_string(c.g) + ")");
  const Eigen::Vector2i d = event_delta(e);
  return {c.b + d.x(), c.g + d.y()};
}

Counts apply_event(const Counts& c, EventKind e, const ModelParams& p) {
  if (!c.valid_for(p)) throw DomainError("apply_event: invalid counts");
  Counts next = apply_event(c, e);
  if (!next.valid_for(p)) throw DomainError("apply_event: result exceeds n");
  return next;
}

std::optional<StepResult> step(const Counts& c, const ModelParams& p, RngStream& rng) {
  const RateVector r = transition_rates(c, p);
  const double total = r.total();
  if (total <= 0) return std::nullopt;
  const double dt = rng.exponential(total);
  const std::array<double, 4> rates = {r.recover_whole, r.recover_semi, r.promote, r.seed};
  const EventKind e = kEventOrder[select_by_rate(rates, total, rng.uniform_open_closed())];
  return StepResult{dt, e, apply_event(c, e, p)};
}

const Counts& Trajectory::state_at(double t) const {
  auto it = std::upper_bound(times.begin(), times.end(), t);
  const auto idx = it == times.begin() ? 0 : static_cast<std::size_t>(it - times.begin()) - 1;
  return states[idx];
}

namespace {

class Recorder {
 public:
  Recorder(Trajectory& traj, std::size_t every) : traj_(traj), every_(std::max<std::size_t>(every, 1)) {}

  void start(const Counts& c) {
    traj_.times.push_back(0.0);
    traj_.states.push_back(c);
  }
  void event(double t, const Counts& after) {
    ++traj_.events;
    last_t_ = t;
    last_ = after;
    if (traj_.events % every_ == 0 || after.b == 0) {
      traj_.times.push_back(t);
      traj_.states.push_back(after);
      pending_ = false;
    } else {
      pending_ = true;
    }
  }
  void finish(double stop_time, bool extinct) {
    if (pending_) {
      traj_.times.push_back(last_t_);
      traj_.states.push_back(last_);
    }
    if (extinct) {
      traj_.tau = stop_time;
      traj_.censored = false;
    } else {
      traj_.censored = true;
    }
  }

 private:
  Trajectory& traj_;
  std::size_t every_;
  bool pending_ = false;
  double last_t_ = 0;
  Counts last_;
};

}  // namespace

Trajectory simulate(const ModelParams& p, const Counts& init, double horizon, RngStream& rng,
                    const SimOptions& opts) {
  if (!init.valid_for(p)) throw DomainError("simulate: invalid initial counts");
  if (!(horizon > 0)) throw DomainError("simulate: horizon must be positive");
  Trajectory traj;
  traj.seed_used = derive_seed(rng.master_seed(), rng.replica_index());
  Recorder rec(traj, opts.record_every);
  rec.start(init);
  auto [t, extinct] = run_chain(p, init, horizon, rng,
                                [&](double te, const Counts&, const Counts& after, EventKind) {
                                  rec.event(te, after);
                                });
  rec.finish(t, extinct);
  return traj;
}

FullConfiguration FullConfiguration::from_counts(int n, const Counts& c) {
  if (n < 0 || c.b < 0 || c.g < 0 || c.b + c.g > n)
    throw DomainError("FullConfiguration::from_counts: invalid counts");
  FullConfiguration cfg;
  cfg.spins.assign(static_cast<std::size_t>(n), 0);
  std::fill_n(cfg.spins.begin(), c.b, std::uint8_t{2});
  std::fill_n(cfg.spins.begin() + c.b, c.g, std::uint8_t{1});
  return cfg;
}

Counts FullConfiguration::counts() const {
  Counts c;
  for (auto s : spins) {
    if (s == 2) ++c.b;
    else if (s == 1) ++c.g;
    else if (s != 0) throw DomainError("FullConfiguration: spin outside {0,1,2}");
  }
  return c;
}

double full_total_rate(const FullConfiguration& cfg, const ModelParams& p) {
  const Counts c = cfg.counts();
  const double infect = p.lambda / p.n * c.b;
  double total = 0;
  for (auto s : cfg.spins) {
    if (s == 0) total += infect;                // 0 -> 1
    else if (s == 1) total += 1.0 + infect;     // 1 -> 0, 1 -> 2
    else total += 1.0;                          // 2 -> 0
  }
  return total;
}

Trajectory simulate_full(const ModelParams& p, const FullConfiguration& init, double horizon,
                         RngStream& rng) {
  if (p.n > kMaxFullVertices)
    throw CapacityError("simulate_full: n exceeds " + std::to_string(kMaxFullVertices));
  if (static_cast<int>(init.spins.size()) != p.n)
    throw DomainError("simulate_full: configuration length differs from n");
  if (!(horizon > 0)) throw DomainError("simulate_full: horizon must be positive");

  std::vector<std::uint8_t> spins = init.spins;
  Counts c = init.counts();
  Trajectory traj;
  traj.seed_used = derive_seed(rng.master_seed(), rng.replica_index());
  traj.times.push_back(0.0);
  traj.states.push_back(c);

  double t = 0;
  while (c.b > 0) {
    const double infect = p.lambda / p.n * c.b;
    double total = 0;
    for (auto s : spins) total += (s == 0) ? infect : (s == 1 ? 1.0 + infect : 1.0);
    const double dt = rng.exponential(total);
    if (t + dt > horizon) {
      traj.censored = true;
      return traj;
    }
    t += dt;

    // Locate the (vertex, target level) clock that fired.
    const double target = rng.uniform_open_closed() * total;
    double cum = 0;
    std::size_t vertex = spins.size() - 1;
    std::uint8_t level = 0;
    for (std::size_t i = 0; i < spins.size(); ++i) {
      const std::uint8_t s = spins[i];
      if (s == 0) {
        cum += infect;
        if (infect > 0 && cum >= target) { vertex = i; level = 1; break; }
      } else if (s == 1) {
        cum += 1.0;
        if (cum >= target) { vertex = i; level = 0; break; }
        cum += infect;
        if (infect > 0 && cum >= target) { vertex = i; level = 2; break; }
      } else {
        cum += 1.0;
        if (cum >= target) { vertex = i; level = 0; break; }
      }
    }
    if (spins[vertex] == 0 && level == 0) level = 1;  // rounding fallback onto a live clock

    const std::uint8_t from = spins[vertex];
    spins[vertex] = level;
    if (from == 2) --c.b;
    if (from == 1) --c.g;
    if (level == 2) ++c.b;
    if (level == 1) ++c.g;
    ++traj.events;
    traj.times.push_back(t);
    traj.states.push_back(c);
  }
  traj.tau = t;
  return traj;
}

}  // namespace semicp
