#include "semicp/harness.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <thread>

#include "semicp/aux_chains.hpp"

namespace semicp {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double pairwise_sum(const double* v, std::size_t n) {
  if (n <= 8) {
    double s = 0;
    for (std::size_t i = 0; i < n; ++i) s += v[i];
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(v, half) + pairwise_sum(v + half, n - half);
}

std::string fmt_num(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

}  // namespace

const char* to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::Sweep: return "sweep";
    case ExperimentKind::MeanField: return "meanfield";
    case ExperimentKind::CouplingAudit: return "coupling-audit";
    case ExperimentKind::Lumping: return "lumping";
    case ExperimentKind::Aux: return "aux";
    case ExperimentKind::Ode: return "ode";
  }
  return "?";
}

ExperimentKind parse_kind(const std::string& s) {
  for (auto k : {ExperimentKind::Sweep, ExperimentKind::MeanField, ExperimentKind::CouplingAudit,
                 ExperimentKind::Lumping, ExperimentKind::Aux, ExperimentKind::Ode})
    if (s == to_string(k)) return k;
  throw UsageError("unknown experiment kind '" + s + "'");
}

void ExperimentConfig::validate() const {
  if (n_list.empty() && kind != ExperimentKind::Ode && kind != ExperimentKind::Aux)
    throw UsageError("n list must not be empty");
  if (lambda_list.empty() && kind != ExperimentKind::Aux) throw UsageError("lambda list must not be empty");
  for (int n : n_list)
    if (n < 1) throw UsageError("every n must be >= 1");
  for (double l : lambda_list)
    if (!(l > 0) || !std::isfinite(l)) throw UsageError("every lambda must be positive");
  if (replicas < 1) throw UsageError("replicas must be >= 1");
  if (!(horizon > 0)) throw UsageError("horizon must be positive");
  if (theta && !(*theta > 0)) throw UsageError("theta must be positive");
}

ExperimentConfig default_config(ExperimentKind kind) {
  ExperimentConfig cfg;
  cfg.kind = kind;
  switch (kind) {
    case ExperimentKind::Sweep: cfg.replicas = 1000; cfg.horizon = 1000; break;
    case ExperimentKind::MeanField: cfg.replicas = 100; cfg.horizon = 5; break;
    case ExperimentKind::CouplingAudit: cfg.replicas = 10000; cfg.horizon = 5; break;
    case ExperimentKind::Lumping: cfg.replicas = 100000; cfg.horizon = 2; break;
    case ExperimentKind::Aux: cfg.replicas = 10000; cfg.horizon = 1; break;
    case ExperimentKind::Ode: cfg.replicas = 1; cfg.horizon = 20; break;
  }
  return cfg;
}

void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  for (unsigned w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      while (!failed.load()) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count) return;
        try {
          fn(i);
        } catch (...) {
          if (!failed.exchange(true)) failure = std::current_exception();
        }
      }
    });
  }
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) return kNaN;
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double w = pos - static_cast<double>(lo);
  return (1 - w) * values[lo] + w * values[hi];
}

double stable_mean(std::vector<double> values) {
  if (values.empty()) return kNaN;
  std::sort(values.begin(), values.end());
  return pairwise_sum(values.data(), values.size()) / static_cast<double>(values.size());
}

std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  std::vector<SweepRow> rows;
  std::uint64_t cell = 0;
  for (double lambda : cfg.lambda_list) {
    for (int n : cfg.n_list) {
      const ModelParams p(n, lambda);
      std::vector<double> tau(cfg.replicas, kNaN);
      parallel_for(cfg.replicas, cfg.threads, [&](std::size_t r) {
        RngStream rng(cfg.master_seed, replica_index(cell, r));
        auto [t, extinct] = run_chain(p, Counts{n, 0}, cfg.horizon, rng,
                                      [](double, const Counts&, const Counts&, EventKind) {});
        if (extinct) tau[r] = t;
      });
      std::vector<double> taus;
      for (double t : tau)
        if (!std::isnan(t)) taus.push_back(t);
      SweepRow row{n, lambda, cfg.replicas, taus.size(), cfg.replicas - taus.size(),
                   quantile(taus, 0.5), stable_mean(taus), quantile(taus, 0.95), cfg.horizon};
      rows.push_back(row);
      ++cell;
    }
  }
  std::stable_sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) {
    return a.lambda != b.lambda ? a.lambda < b.lambda : a.n < b.n;
  });
  return rows;
}

double meanfield_sup_deviation(const ModelParams& p, const OdePath& ode, double T, RngStream& rng) {
  const double n = p.n;
  auto dev = [&](const Counts& c, double t) {
    const OdeState x = ode.at(t);
    return std::abs(c.b / n - x(0)) + std::abs(c.g / n - x(1));
  };
  Counts c = counts_from_fractions(p.n, ode.states.front()(0), ode.states.front()(1));
  double sup = dev(c, 0.0);
  double t = 0;
  // The full process (not stopped at extinction of wholly-infected vertices).
  while (true) {
    auto res = step(c, p, rng);
    if (!res || t + res->dt > T) break;
    t += res->dt;
    sup = std::max({sup, dev(c, t), dev(res->next, t)});
    c = res->next;
  }
  return std::max(sup, dev(c, T));
}

std::vector<MeanFieldRow> run_meanfield(const ExperimentConfig& cfg) {
  cfg.validate();
  std::vector<MeanFieldRow> rows;
  std::uint64_t cell = 0;
  for (double lambda : cfg.lambda_list) {
    const OdePath ode = integrate(OdeState(1.0, 0.0), lambda, cfg.horizon);
    for (int n : cfg.n_list) {
      const ModelParams p(n, lambda);
      std::vector<double> sup(cfg.replicas);
      parallel_for(cfg.replicas, cfg.threads, [&](std::size_t r) {
        RngStream rng(cfg.master_seed, replica_index(cell, r));
        sup[r] = meanfield_sup_deviation(p, ode, cfg.horizon, rng);
      });
      const auto exceed = static_cast<std::size_t>(
          std::count_if(sup.begin(), sup.end(), [&](double d) { return d > cfg.epsilon; }));
      rows.push_back({n, lambda, cfg.horizon, cfg.replicas, cfg.epsilon, exceed, quantile(sup, 0.5)});
      ++cell;
    }
  }
  return rows;
}

std::vector<AuditRow> run_coupling_audit(const ExperimentConfig& cfg) {
  cfg.validate();
  std::vector<AuditRow> rows;
  std::uint64_t cell = 0;
  for (auto variant : {CouplingVariant::Verbatim, CouplingVariant::Repaired}) {
    for (double lambda : cfg.lambda_list) {
      for (int n : cfg.n_list) {
        const ModelParams p(n, lambda);
        std::vector<std::optional<OrderViolation>> first(cfg.replicas);
        parallel_for(cfg.replicas, cfg.threads, [&](std::size_t r) {
          RngStream rng(cfg.master_seed, replica_index(cell, r));
          const PairState init = random_ordered_pair(n, rng);
          const CoupledRun run = simulate_coupled(init, p, cfg.horizon, variant, rng, false);
          if (!run.violations.empty()) first[r] = run.violations.front();
        });
        AuditRow row{to_string(variant), n, lambda, cfg.replicas, 0, std::nullopt};
        for (const auto& f : first) {
          if (!f) continue;
          if (row.violation_replicas++ == 0) row.first_violation_example = f;
        }
        rows.push_back(row);
        ++cell;
      }
    }
  }
  return rows;
}

double lumping_tv(const ModelParams& p, const Counts& init, double T, std::size_t replicas,
                  std::uint64_t master_seed, std::uint64_t cell, unsigned threads) {
  if (p.n > 8) throw CapacityError("lumping check supports n <= 8");
  if (T <= 0) return 0.0;
  std::vector<Counts> lumped(replicas), full(replicas);
  const FullConfiguration cfg0 = FullConfiguration::from_counts(p.n, init);
  parallel_for(replicas, threads, [&](std::size_t r) {
    RngStream a(master_seed, replica_index(2 * cell, r));
    lumped[r] = simulate(p, init, T, a, {std::numeric_limits<std::size_t>::max()}).final_state();
    RngStream b(master_seed, replica_index(2 * cell + 1, r));
    full[r] = simulate_full(p, cfg0, T, b).final_state();
  });
  std::map<std::pair<int, int>, long long> diff;
  for (std::size_t r = 0; r < replicas; ++r) {
    ++diff[{lumped[r].b, lumped[r].g}];
    --diff[{full[r].b, full[r].g}];
  }
  long long abs_sum = 0;
  for (const auto& [k, v] : diff) abs_sum += std::llabs(v);
  return 0.5 * static_cast<double>(abs_sum) / static_cast<double>(replicas);
}

std::vector<LumpingRow> run_lumping_check(const ExperimentConfig& cfg) {
  cfg.validate();
  for (int n : cfg.n_list)
    if (n > 8) throw CapacityError("lumping check supports n <= 8, got " + std::to_string(n));
  std::vector<LumpingRow> rows;
  std::uint64_t cell = 0;
  for (double lambda : cfg.lambda_list) {
    for (int n : cfg.n_list) {
      const ModelParams p(n, lambda);
      const double tv = lumping_tv(p, Counts{n, 0}, cfg.horizon, cfg.replicas, cfg.master_seed, cell++,
                                   cfg.threads);
      rows.push_back({n, lambda, cfg.horizon, cfg.replicas, tv});
    }
  }
  return rows;
}

namespace {

void hat_checks(const ExperimentConfig& cfg, const SurvivalDesign& d, int n, std::uint64_t cell,
                std::vector<AuxRow>& rows) {
  const double t = cfg.horizon;
  std::vector<char> both(cfg.replicas), sum_only(cfg.replicas);
  const HatState h0 = hat_initial(d, n);
  parallel_for(cfg.replicas, cfg.threads, [&](std::size_t r) {
    RngStream rng(cfg.master_seed, replica_index(cell, r));
    const HatState ht = simulate_hat(d, n, t, rng).states.back();
    sum_only[r] = ht.shat >= h0.shat;
    both[r] = sum_only[r] && ht.bhat >= h0.bhat;
  });
  const double reps = static_cast<double>(cfg.replicas);
  const double f_both = std::count(both.begin(), both.end(), 1) / reps;
  const double f_sum = std::count(sum_only.begin(), sum_only.end(), 1) / reps;
  const std::string at = "t=" + fmt_num(t);
  rows.push_back({"hat_growth", d.lambda, n, kNaN, cfg.replicas, f_both, 0.99, f_both >= 0.99,
                  "P(Bhat_t >= Bhat_0, Shat_t >= Shat_0) at " + at});
  rows.push_back({"hat_sum_growth", d.lambda, n, kNaN, cfg.replicas, f_sum, 0.99, f_sum >= 0.99,
                  "P(Shat_t >= Shat_0) at " + at});
}

void domination_check(const ExperimentConfig& cfg, const SurvivalDesign& d, int n, std::uint64_t cell,
                      std::vector<AuxRow>& rows) {
  std::vector<char> violated(cfg.replicas);
  const DominationState init = domination_initial(d, n);
  if (!in_design_box(d, n, init.b, init.s)) {
    rows.push_back({"domination", d.lambda, n, kNaN, cfg.replicas, kNaN, 0, false,
                    "floored pivot lies outside the design box at this n"});
    return;
  }
  parallel_for(cfg.replicas, cfg.threads, [&](std::size_t r) {
    RngStream rng(cfg.master_seed, replica_index(cell, r));
    violated[r] = !simulate_domination(init, d, n, d.T4, rng).violations.empty();
  });
  const auto count = static_cast<double>(std::count(violated.begin(), violated.end(), 1));
  rows.push_back({"domination", d.lambda, n, kNaN, cfg.replicas, count, 0, count == 0,
                  "violation replicas before gamma, horizon T4=" + fmt_num(d.T4)});
}

void tilde_checks(const ExperimentConfig& cfg, int n, double theta, std::uint64_t cell,
                  std::vector<AuxRow>& rows) {
  const double t_ext = (1 + theta / 2) * std::log(static_cast<double>(n));
  const std::array<double, 3> times = {1.0, 3.0, 5.0};
  const double horizon = std::max(t_ext, times.back());
  std::vector<char> extinct(cfg.replicas);
  std::vector<std::array<double, 3>> values(cfg.replicas);
  const TildeParams tp(theta, n);
  parallel_for(cfg.replicas, cfg.threads, [&](std::size_t r) {
    RngStream rng(cfg.master_seed, replica_index(cell, r));
    const TildeTrajectory tr = simulate_tilde(tp, horizon, rng);
    extinct[r] = tr.extinction_time && *tr.extinction_time <= t_ext;
    for (std::size_t k = 0; k < times.size(); ++k) values[r][k] = static_cast<double>(tr.value_at(times[k]));
  });
  const double reps = static_cast<double>(cfg.replicas);
  const double frac = std::count(extinct.begin(), extinct.end(), 1) / reps;
  const double bound = tilde_extinction_bound(n, theta);
  rows.push_back({"tilde_extinction", kNaN, n, theta, cfg.replicas, frac, bound, frac >= bound,
                  "extinct by (1+theta/2) ln n = " + fmt_num(t_ext)});
  for (std::size_t k = 0; k < times.size(); ++k) {
    std::vector<double> col(cfg.replicas);
    for (std::size_t r = 0; r < cfg.replicas; ++r) col[r] = values[r][k];
    const double want = tilde_mean(times[k], n, theta);
    const double rel = std::abs(stable_mean(col) - want) / want;
    rows.push_back({"tilde_mean", kNaN, n, theta, cfg.replicas, rel, 0.05, rel <= 0.05,
                    "relative error of the empirical mean at t=" + fmt_num(times[k])});
  }
}

void persistence_check(const ExperimentConfig& cfg, double lambda, int n, double theta,
                       std::uint64_t cell, std::vector<AuxRow>& rows) {
  const double level = theta / ((3 + theta) * lambda);
  const OdePath ode = integrate(OdeState(1.0, 0.0), lambda, 200.0, 1e-2);
  double t1 = ode.t_end;
  for (std::size_t k = 0; k < ode.states.size(); ++k) {
    if (ode.states[k].sum() <= level / 2) {
      t1 = ode.time(k);
      break;
    }
  }
  const double t_end = t1 + (1 + theta / 2) * std::log(static_cast<double>(n));
  const ModelParams p(n, lambda);
  std::vector<char> stayed(cfg.replicas);
  parallel_for(cfg.replicas, cfg.threads, [&](std::size_t r) {
    RngStream rng(cfg.master_seed, replica_index(cell, r));
    Counts c{n, 0};
    double t = 0;
    bool ok = true;
    while (true) {
      auto res = step(c, p, rng);
      if (!res || t + res->dt > t_end) break;
      t += res->dt;
      c = res->next;
      if (t >= t1 && c.s() >= level * n) {
        ok = false;
        break;
      }
    }
    stayed[r] = ok;
  });
  const double frac = std::count(stayed.begin(), stayed.end(), 1) / static_cast<double>(cfg.replicas);
  rows.push_back({"subcritical_persistence", lambda, n, theta, cfg.replicas, frac, 0.9, frac >= 0.9,
                  "(B+G)/n stays below theta/((3+theta)lambda) on [T1, T1+(1+theta/2)ln n], T1=" +
                      fmt_num(t1)});
}

}  // namespace

std::vector<AuxRow> run_aux_checks(const ExperimentConfig& cfg) {
  cfg.validate();
  std::vector<int> ns = cfg.n_list.empty() ? std::vector<int>{1000} : cfg.n_list;
  std::vector<AuxRow> rows;
  std::uint64_t cell = 0;
  for (double lambda : cfg.lambda_list) {
    std::optional<SurvivalDesign> design;
    try {
      design = design_survival(lambda);
    } catch (const InfeasibleDesign& e) {
      rows.push_back({"design", lambda, 0, kNaN, 0, kNaN, kNaN, false, e.what()});
    }
    if (design) {
      std::ostringstream detail;
      detail.precision(10);
      detail << "beta=" << design->beta << " alpha=" << design->alpha << " b0=" << design->b0
             << " g0=" << design->g0 << " D=" << design->D << " T4=" << design->T4
             << " q1=" << design->q1 << " q2=" << design->q2 << " C6=" << design->C6;
      rows.push_back({"design", lambda, 0, kNaN, 0, design->alpha, kNaN, true, detail.str()});
      for (int n : ns) {
        hat_checks(cfg, *design, n, cell++, rows);
        domination_check(cfg, *design, n, cell++, rows);
      }
    } else if (cfg.theta && lambda < 4) {
      for (int n : ns) persistence_check(cfg, lambda, n, *cfg.theta, cell++, rows);
    }
  }
  if (cfg.theta)
    for (int n : ns) tilde_checks(cfg, n, *cfg.theta, cell++, rows);
  return rows;
}

std::vector<OdeRow> run_ode(const ExperimentConfig& cfg) {
  cfg.validate();
  std::vector<OdeRow> rows;
  for (double lambda : cfg.lambda_list) {
    const OdePath path = integrate(OdeState(1.0, 0.0), lambda, cfg.horizon);
    for (std::size_t k = 0; k < path.states.size(); ++k)
      rows.push_back({lambda, path.time(k), path.states[k](0), path.states[k](1)});
  }
  return rows;
}

}  // namespace semicp
