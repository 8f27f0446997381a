#include <doctest.h>

#include <cmath>
#include <set>

#include "semicp/chain.hpp"
#include "semicp/errors.hpp"

using namespace semicp;

namespace {

bool same_trajectory(const Trajectory& a, const Trajectory& b) {
  return a.times == b.times && a.states == b.states && a.tau == b.tau && a.censored == b.censored &&
         a.events == b.events;
}

}  // namespace

TEST_CASE("model params are validated") {
  CHECK_THROWS_AS(ModelParams(0, 1.0), DomainError);
  CHECK_THROWS_AS(ModelParams(10, 0.0), DomainError);
  CHECK_THROWS_AS(ModelParams(10, -1.0), DomainError);
  CHECK_NOTHROW(ModelParams(1, 0.5));
}

TEST_CASE("transition rates") {
  SUBCASE("worked values") {
    const RateVector r = transition_rates({2, 3}, ModelParams(10, 1.0));
    CHECK(r.recover_whole == 2);
    CHECK(r.recover_semi == 3);
    CHECK(r.promote == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(r.seed == doctest::Approx(1.0).epsilon(1e-15));

    const RateVector z = transition_rates({0, 5}, ModelParams(10, 3.0));
    CHECK(z.recover_whole == 0);
    CHECK(z.recover_semi == 5);
    CHECK(z.promote == 0);
    CHECK(z.seed == 0);

    const RateVector full = transition_rates({7, 0}, ModelParams(7, 2.5));
    CHECK(full.recover_whole == 7);
    CHECK(full.recover_semi == 0);
    CHECK(full.promote == 0);
    CHECK(full.seed == 0);
  }

  SUBCASE("exhaustive for n <= 50") {
    for (int n = 1; n <= 50; ++n) {
      for (double lambda : {0.5, 2.0, 4.0, 7.25}) {
        const ModelParams p(n, lambda);
        for (int b = 0; b <= n; ++b) {
          for (int g = 0; b + g <= n; ++g) {
            const RateVector r = transition_rates({b, g}, p);
            const double promote = lambda * b * g / n;
            const double seed = lambda * b * (n - b - g) / n;
            REQUIRE(r.recover_whole == b);
            REQUIRE(r.recover_semi == g);
            REQUIRE(std::abs(r.promote - promote) <= 1e-14 * std::max(1.0, promote));
            REQUIRE(std::abs(r.seed - seed) <= 1e-14 * std::max(1.0, seed));
            if (b == 0) REQUIRE((r.promote == 0 && r.seed == 0));
          }
        }
      }
    }
  }

  SUBCASE("invalid counts") {
    const ModelParams p(10, 1.0);
    CHECK_THROWS_AS(transition_rates({-1, 0}, p), DomainError);
    CHECK_THROWS_AS(transition_rates({0, -1}, p), DomainError);
    CHECK_THROWS_AS(transition_rates({6, 5}, p), DomainError);
  }
}

TEST_CASE("apply_event") {
  CHECK(apply_event({2, 3}, EventKind::Promote) == Counts{3, 2});
  CHECK(apply_event({1, 0}, EventKind::RecoverWhole) == Counts{0, 0});
  CHECK(apply_event({1, 4}, EventKind::RecoverSemi) == Counts{1, 3});
  CHECK(apply_event({1, 4}, EventKind::Seed) == Counts{1, 5});
  CHECK_THROWS_AS(apply_event({0, 0}, EventKind::Seed), DomainError);
  CHECK_THROWS_AS(apply_event({0, 3}, EventKind::Promote), DomainError);
  CHECK_THROWS_AS(apply_event({0, 3}, EventKind::RecoverWhole), DomainError);
  CHECK_THROWS_AS(apply_event({2, 0}, EventKind::RecoverSemi), DomainError);
  CHECK_THROWS_AS(apply_event({2, 3}, EventKind::Seed, ModelParams(5, 1.0)), DomainError);

  for (EventKind e : kEventOrder) {
    const Eigen::Vector2i d = event_delta(e);
    const Counts next = apply_event({3, 3}, e);
    CHECK(next.b - 3 == d.x());
    CHECK(next.g - 3 == d.y());
  }
}

TEST_CASE("counts from fractions use the floor") {
  CHECK(counts_from_fractions(1000, 0.3, 0.22) == Counts{300, 220});
  CHECK(counts_from_fractions(10, 0.35, 0.29) == Counts{3, 2});
  CHECK(counts_from_fractions(7, 1.0, 0.0) == Counts{7, 0});
}

TEST_CASE("step") {
  SUBCASE("absorbed at the origin") {
    RngStream rng(1, 0);
    CHECK_FALSE(step({0, 0}, ModelParams(5, 2.0), rng).has_value());
  }

  SUBCASE("no promote without semi-infected vertices") {
    const ModelParams p(2, 1.0);
    std::set<EventKind> seen;
    for (std::uint64_t i = 0; i < 2000; ++i) {
      RngStream rng(3, i);
      const auto res = step({1, 0}, p, rng);
      REQUIRE(res.has_value());
      CHECK(res->dt > 0);
      seen.insert(res->event);
    }
    CHECK(seen == std::set<EventKind>{EventKind::RecoverWhole, EventKind::Seed});
  }

  SUBCASE("seeded steps repeat") {
    const ModelParams p(20, 2.0);
    RngStream a(99, 5), b(99, 5);
    const auto x = step({5, 5}, p, a);
    const auto y = step({5, 5}, p, b);
    REQUIRE((x && y));
    CHECK(x->dt == y->dt);
    CHECK(x->event == y->event);
    CHECK(x->next == y->next);
  }

  SUBCASE("event frequencies follow the rates") {
    const ModelParams p(20, 2.0);
    const Counts c{5, 5};
    const RateVector r = transition_rates(c, p);
    std::array<int, 4> hits{};
    const int trials = 40000;
    double dt_sum = 0;
    for (int i = 0; i < trials; ++i) {
      RngStream rng(11, static_cast<std::uint64_t>(i));
      const auto res = step(c, p, rng);
      ++hits[static_cast<int>(res->event)];
      dt_sum += res->dt;
    }
    for (EventKind e : kEventOrder) {
      const double prob = r[e] / r.total();
      const double se = std::sqrt(prob * (1 - prob) / trials);
      CHECK(std::abs(hits[static_cast<int>(e)] / double(trials) - prob) < 5 * se);
    }
    CHECK(dt_sum / trials == doctest::Approx(1 / r.total()).epsilon(0.03));
  }
}

TEST_CASE("simulate") {
  SUBCASE("no wholly infected vertices") {
    RngStream rng(1, 0);
    const Trajectory t = simulate(ModelParams(10, 2.0), {0, 4}, 5.0, rng);
    REQUIRE(t.tau.has_value());
    CHECK(*t.tau == 0);
    CHECK_FALSE(t.censored);
    CHECK(t.states.size() == 1);
  }

  SUBCASE("invariants along the path") {
    const ModelParams p(60, 3.0);
    for (std::uint64_t i = 0; i < 50; ++i) {
      RngStream rng(17, i);
      const Trajectory t = simulate(p, {60, 0}, 20.0, rng);
      REQUIRE(t.times.size() == t.states.size());
      CHECK(t.censored != t.tau.has_value());
      for (std::size_t k = 0; k < t.states.size(); ++k) {
        REQUIRE(t.states[k].valid_for(p));
        if (k > 0) {
          REQUIRE(t.times[k] > t.times[k - 1]);
          const int moved = std::abs(t.states[k].b - t.states[k - 1].b) +
                            std::abs(t.states[k].g - t.states[k - 1].g);
          REQUIRE((moved == 1 || moved == 2));
        }
      }
      if (t.tau) {
        CHECK(t.final_state().b == 0);
        CHECK(t.times.back() == *t.tau);
        for (std::size_t k = 0; k + 1 < t.states.size(); ++k) REQUIRE(t.states[k].b > 0);
      }
    }
  }

  SUBCASE("bit-identical reruns") {
    const ModelParams p(100, 2.0);
    RngStream a(42, 7), b(42, 7);
    CHECK(same_trajectory(simulate(p, {100, 0}, 50.0, a), simulate(p, {100, 0}, 50.0, b)));
  }

  SUBCASE("subsampling keeps tau exact") {
    const ModelParams p(100, 2.0);
    RngStream a(8, 1), b(8, 1);
    const Trajectory full = simulate(p, {100, 0}, 100.0, a);
    const Trajectory thin = simulate(p, {100, 0}, 100.0, b, SimOptions{10});
    CHECK(full.tau == thin.tau);
    CHECK(full.events == thin.events);
    CHECK(thin.states.size() < full.states.size());
    CHECK(thin.final_state() == full.final_state());
    CHECK(thin.times.back() == full.times.back());
  }

  SUBCASE("subcritical runs die before 10 ln n") {
    const ModelParams p(400, 2.0);
    int extinct = 0;
    for (std::uint64_t i = 0; i < 1000; ++i) {
      RngStream rng(2024, i);
      extinct += simulate(p, {400, 0}, 10 * std::log(400.0), rng, SimOptions{1000}).tau.has_value();
    }
    CHECK(extinct >= 990);
  }

  SUBCASE("single vertex recovers at rate one") {
    const ModelParams p(1, 3.0);
    int alive = 0;
    const int runs = 20000;
    for (int i = 0; i < runs; ++i) {
      RngStream rng(5, static_cast<std::uint64_t>(i));
      alive += simulate(p, {1, 0}, 1.0, rng).censored;
    }
    const double want = std::exp(-1.0);
    CHECK(std::abs(alive / double(runs) - want) < 5 * std::sqrt(want * (1 - want) / runs));
  }
}

TEST_CASE("full configuration process") {
  SUBCASE("all healthy") {
    RngStream rng(1, 0);
    const ModelParams p(6, 1.5);
    const Trajectory t = simulate_full(p, FullConfiguration::from_counts(6, {0, 0}), 2.0, rng);
    REQUIRE(t.tau.has_value());
    CHECK(*t.tau == 0);
    CHECK(t.states.size() == 1);
  }

  SUBCASE("total rate sums over vertices and levels") {
    const ModelParams p(3, 1.0);
    const FullConfiguration cfg{{2, 0, 0}};
    CHECK(full_total_rate(cfg, p) == doctest::Approx(5.0 / 3.0).epsilon(1e-15));
    CHECK(cfg.counts() == Counts{1, 0});

    const ModelParams q(10, 2.0);
    const FullConfiguration mixed = FullConfiguration::from_counts(10, {3, 4});
    CHECK(mixed.counts() == Counts{3, 4});
    CHECK(full_total_rate(mixed, q) == doctest::Approx(transition_rates({3, 4}, q).total()));
  }

  SUBCASE("capacity") {
    const int n = kMaxFullVertices + 1;
    const ModelParams p(n, 1.0);
    RngStream rng(1, 0);
    CHECK_THROWS_AS(simulate_full(p, FullConfiguration::from_counts(n, {1, 0}), 1.0, rng), CapacityError);
  }

  SUBCASE("path invariants and determinism") {
    const ModelParams p(8, 2.0);
    const auto init = FullConfiguration::from_counts(8, {8, 0});
    RngStream a(4, 2), b(4, 2);
    const Trajectory x = simulate_full(p, init, 10.0, a);
    const Trajectory y = simulate_full(p, init, 10.0, b);
    CHECK(same_trajectory(x, y));
    for (const Counts& c : x.states) CHECK(c.valid_for(p));
  }
}
