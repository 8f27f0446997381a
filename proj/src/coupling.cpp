#include "semicp/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace semicp {

namespace {

const Eigen::Vector2i kStay(0, 0);
const Eigen::Vector2i kRecoverWhole(-1, 0);
const Eigen::Vector2i kRecoverSemi(0, -1);
const Eigen::Vector2i kPromote(1, -1);
const Eigen::Vector2i kSeed(0, 1);

Counts shifted(const Counts& c, const Eigen::Vector2i& d) { return {c.b + d.x(), c.g + d.y()}; }

bool close_rel(double a, double b) {
  return std::abs(a - b) <= 1e-12 * std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace

const char* to_string(CouplingVariant v) {
  return v == CouplingVariant::Verbatim ? "Verbatim" : "Repaired";
}

std::vector<JointRateRow> coupling_rates(const PairState& pair, const ModelParams& p,
                                         CouplingVariant variant) {
  const Counts& c1 = pair.s1;
  const Counts& c2 = pair.s2;
  if (!c1.valid_for(p) || !c2.valid_for(p)) throw DomainError("coupling_rates: invalid counts");
  if (c1.b < c2.b) throw DomainError("coupling_rates: requires b1 >= b2");

  const double k = p.lambda / p.n;
  const double bg1 = static_cast<double>(c1.b) * c1.g;
  const double bg2 = static_cast<double>(c2.b) * c2.g;
  const double bh1 = static_cast<double>(c1.b) * (p.n - c1.s());
  const double bh2 = static_cast<double>(c2.b) * (p.n - c2.s());
  const int gmin = std::min(c1.g, c2.g);
  const double bg_min = std::min(bg1, bg2);
  const double bh_min = std::min(bh1, bh2);

  const int lone_whole1 = c1.b - c2.b;
  int lone_semi2 = c2.g - gmin;
  int paired = 0;
  if (variant == CouplingVariant::Repaired) {
    paired = std::min(lone_whole1, std::max(0, c2.g - c1.g));
    lone_semi2 -= paired;
  }

  std::vector<JointRateRow> rows;
  rows.reserve(12);
  rows.push_back({kRecoverWhole, kRecoverWhole, static_cast<double>(c2.b)});
  rows.push_back({kRecoverWhole, kStay, static_cast<double>(lone_whole1 - paired)});
  rows.push_back({kRecoverSemi, kRecoverSemi, static_cast<double>(gmin)});
  rows.push_back({kRecoverSemi, kStay, static_cast<double>(c1.g - gmin)});
  rows.push_back({kStay, kRecoverSemi, static_cast<double>(lone_semi2)});
  rows.push_back({kPromote, kPromote, k * bg_min});
  rows.push_back({kPromote, kStay, k * (bg1 - bg_min)});
  rows.push_back({kStay, kPromote, k * (bg2 - bg_min)});
  rows.push_back({kSeed, kSeed, k * bh_min});
  rows.push_back({kSeed, kStay, k * (bh1 - bh_min)});
  rows.push_back({kStay, kSeed, k * (bh2 - bh_min)});
  if (variant == CouplingVariant::Repaired)
    rows.push_back({kRecoverWhole, kRecoverSemi, static_cast<double>(paired)});
  return rows;
}

CoupledRun simulate_coupled(const PairState& init, const ModelParams& p, double horizon,
                            CouplingVariant variant, RngStream& rng, bool record_path) {
  if (!dominates(init.s1, init.s2)) throw DomainError("simulate_coupled: initial pair is not ordered");
  if (!(horizon > 0)) throw DomainError("simulate_coupled: horizon must be positive");

  CoupledRun run;
  PairState x = init;
  if (record_path) {
    run.times.push_back(0.0);
    run.states.push_back(x);
  }
  double t = 0;
  std::vector<double> cum;
  while (true) {
    // Rows require b1 >= b2; once that coordinate breaks the Verbatim table
    // is no longer defined, so the run stops there (already logged).
    if (x.s1.b < x.s2.b) break;
    const auto rows = coupling_rates(x, p, variant);
    double total = 0;
    for (const auto& r : rows) total += r.rate;
    if (total <= 0) break;
    const double dt = rng.exponential(total);
    if (t + dt > horizon) break;
    t += dt;

    const double target = rng.uniform_open_closed() * total;
    double acc = 0;
    std::size_t pick = rows.size();
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].rate <= 0) continue;
      acc += rows[i].rate;
      pick = i;
      if (acc >= target) break;
    }
    x = {shifted(x.s1, rows[pick].delta1), shifted(x.s2, rows[pick].delta2)};
    if (!x.s1.valid_for(p) || !x.s2.valid_for(p))
      throw DomainError("simulate_coupled: joint row produced an invalid state");
    if (record_path) {
      run.times.push_back(t);
      run.states.push_back(x);
    }
    if (!dominates(x.s1, x.s2)) run.violations.push_back({t, x});
  }
  run.final_pair = x;
  return run;
}

MarginalReport marginal_consistency(const PairState& pair, const ModelParams& p,
                                    CouplingVariant variant) {
  MarginalReport rep;
  rep.expected1 = transition_rates(pair.s1, p);
  rep.expected2 = transition_rates(pair.s2, p);
  const auto rows = coupling_rates(pair, p, variant);

  auto project = [&](const Eigen::Vector2i& d, RateVector& into, double rate, int chain) {
    if (d == kStay) return;
    if (d == kRecoverWhole) into.recover_whole += rate;
    else if (d == kRecoverSemi) into.recover_semi += rate;
    else if (d == kPromote) into.promote += rate;
    else if (d == kSeed) into.seed += rate;
    else rep.mismatches.push_back("chain " + std::to_string(chain) + ": row delta is not an event atom");
  };
  for (const auto& r : rows) {
    if (r.rate < 0) {
      std::ostringstream msg;
      msg << "negative row rate " << r.rate;
      rep.mismatches.push_back(msg.str());
    }
    project(r.delta1, rep.projected1, r.rate, 1);
    project(r.delta2, rep.projected2, r.rate, 2);
  }
  auto compare = [&](const RateVector& got, const RateVector& want, int chain) {
    for (EventKind e : kEventOrder) {
      if (!close_rel(got[e], want[e])) {
        std::ostringstream msg;
        msg.precision(17);
        msg << "chain " << chain << " " << to_string(e) << ": projected " << got[e] << " expected "
            << want[e];
        rep.mismatches.push_back(msg.str());
      }
    }
  };
  compare(rep.projected1, rep.expected1, 1);
  compare(rep.projected2, rep.expected2, 2);
  return rep;
}

Counts random_counts(int n, RngStream& rng) {
  while (true) {
    const auto b = static_cast<int>(rng.below(static_cast<std::uint64_t>(n) + 1));
    const auto g = static_cast<int>(rng.below(static_cast<std::uint64_t>(n) + 1));
    if (b + g <= n) return {b, g};
  }
}

PairState random_ordered_pair(int n, RngStream& rng) {
  const Counts s2 = random_counts(n, rng);
  // For b1 in [b2, n] the admissible sums are s1 in [max(s2, b1), n].
  std::uint64_t total = 0;
  for (int b1 = s2.b; b1 <= n; ++b1) total += static_cast<std::uint64_t>(n - std::max(s2.s(), b1) + 1);
  std::uint64_t r = rng.below(total);
  for (int b1 = s2.b; b1 <= n; ++b1) {
    const int lo = std::max(s2.s(), b1);
    const auto width = static_cast<std::uint64_t>(n - lo + 1);
    if (r < width) {
      const int s1 = lo + static_cast<int>(r);
      return {{b1, s1 - b1}, s2};
    }
    r -= width;
  }
  return {s2, s2};
}

bool in_design_box(const SurvivalDesign& d, int n, std::int64_t b, std::int64_t s) {
  return d.box.contains(static_cast<double>(b) / n, static_cast<double>(s) / n, 1e-12);
}

std::vector<JointRateRow> domination_rates(std::int64_t b, std::int64_t s, const SurvivalDesign& d,
                                           int n) {
  if (!in_design_box(d, n, b, s)) {
    std::ostringstream msg;
    msg << "domination_rates: chain (b=" << b << ", s=" << s << ") outside the design box";
    throw RegionExit(msg.str());
  }
  const double nn = n;
  const double B = static_cast<double>(b);
  const double G = static_cast<double>(s - b);
  const double f1 = B;
  const double f2 = G;
  const double f3 = d.lambda / nn * B * G;
  const double f4 = d.lambda / nn * B * (nn - B - G);
  const HatRates h = hat_rates(d, n);
  // Inside the box every residual is nonnegative; the clamp only removes
  // rounding noise on the boundary.
  auto residual = [](double v) { return std::max(0.0, v); };

  const Eigen::Vector2i dn_both(-1, -1), dn_s(0, -1), up_b(1, 0), up_s(0, 1), stay(0, 0);
  return {
      {dn_both, dn_both, f1},
      {stay, dn_both, residual(h.d_joint - f1)},
      {dn_s, dn_s, f2},
      {stay, dn_s, residual(h.d_s - f2)},
      {up_b, up_b, h.b_birth},
      {up_b, stay, residual(f3 - h.b_birth)},
      {up_s, up_s, h.s_birth},
      {up_s, stay, residual(f4 - h.s_birth)},
  };
}

DominationState domination_initial(const SurvivalDesign& d, int n) {
  const HatState h = hat_initial(d, n);
  return {h.bhat, h.shat, h.bhat, h.shat};
}

DominationRun simulate_domination(const DominationState& init, const SurvivalDesign& d, int n,
                                  double horizon, RngStream& rng) {
  if (init.b != init.bhat || init.s != init.shat)
    throw DomainError("simulate_domination: chain and minorant must start equal");
  if (!in_design_box(d, n, init.b, init.s))
    throw DomainError("simulate_domination: initial state outside the design box");

  DominationRun run;
  DominationState x = init;
  run.times.push_back(0.0);
  run.states.push_back(x);
  double t = 0;
  while (true) {
    const auto rows = domination_rates(x.b, x.s, d, n);
    double total = 0;
    for (const auto& r : rows) total += r.rate;
    const double dt = rng.exponential(total);
    if (t + dt > horizon) break;
    t += dt;
    const double target = rng.uniform_open_closed() * total;
    double acc = 0;
    std::size_t pick = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].rate <= 0) continue;
      acc += rows[i].rate;
      pick = i;
      if (acc >= target) break;
    }
    x.b += rows[pick].delta1.x();
    x.s += rows[pick].delta1.y();
    x.bhat += rows[pick].delta2.x();
    x.shat += rows[pick].delta2.y();
    run.times.push_back(t);
    run.states.push_back(x);
    if (!x.dominated()) run.violations.emplace_back(t, x);
    if (!in_design_box(d, n, x.b, x.s)) {
      run.gamma = t;
      break;
    }
  }
  return run;
}

}  // namespace semicp
