#include <doctest.h>

#include <cmath>

#include "semicp/errors.hpp"
#include "semicp/meanfield.hpp"
#include "semicp/rng.hpp"

using namespace semicp;

namespace {

double residual(const OdeState& x, double lambda) { return vector_field(x, lambda).cwiseAbs().sum(); }

int positive_equilibria(const EquilibriumSet& e) {
  int k = 0;
  for (const auto& p : e.points) k += p(0) > 0;
  return k;
}

}  // namespace

TEST_CASE("vector field") {
  CHECK(vector_field(OdeState(0, 0), 3.0) == OdeState(0, 0));
  const OdeState v = vector_field(OdeState(0.2, 0.2), 5.0);
  CHECK(v(0) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(v(1) == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(residual(OdeState((3 + std::sqrt(5.0)) / 10, 0.2), 5.0) <= 1e-12);

  // Works for other scalar types through the template.
  const Eigen::Matrix<long double, 2, 1> wide = vector_field(Eigen::Matrix<long double, 2, 1>(0.2L, 0.2L), 5.0L);
  CHECK(static_cast<double>(wide(1)) == doctest::Approx(0.2));
}

TEST_CASE("equilibria") {
  SUBCASE("worked values") {
    const auto two = equilibria(2.0);
    REQUIRE(two.points.size() == 1);
    CHECK(two.points[0] == OdeState(0, 0));
    CHECK_FALSE(two.critical);

    const auto five = equilibria(5.0);
    REQUIRE(five.points.size() == 3);
    CHECK(five.points[1](0) == doctest::Approx((3 - std::sqrt(5.0)) / 10).epsilon(1e-12));
    CHECK(five.points[2](0) == doctest::Approx((3 + std::sqrt(5.0)) / 10).epsilon(1e-12));
    CHECK(five.points[1](0) == doctest::Approx(0.0763932).epsilon(1e-6));
    CHECK(five.points[2](0) == doctest::Approx(0.5236068).epsilon(1e-6));
    CHECK(five.points[1](1) == doctest::Approx(0.2));

    const auto four = equilibria(4.0);
    REQUIRE(four.points.size() == 2);
    CHECK(four.critical);
    CHECK(four.points[1](0) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(four.points[1](1) == doctest::Approx(0.25).epsilon(1e-12));
  }

  SUBCASE("count and residuals across the threshold") {
    for (double lambda : {1.0, 2.0, 3.0, 3.5, 3.9, 4.0, 4.1, 5.0, 8.0}) {
      const auto e = equilibria(lambda);
      const int want = lambda < 4 ? 0 : (lambda == 4 ? 1 : 2);
      CHECK(positive_equilibria(e) == want);
      CHECK(e.critical == (lambda == 4.0));
      for (const auto& p : e.points) CHECK(residual(p, lambda) <= 1e-10);
    }
  }
}

TEST_CASE("integration") {
  SUBCASE("equilibrium stays put") {
    const OdePath path = integrate(OdeState(0, 0), 2.0, 10.0);
    for (const auto& x : path.states) REQUIRE(x == OdeState(0, 0));
  }

  SUBCASE("grid ends at t_end") {
    const OdePath a = integrate(OdeState(1, 0), 2.0, 1.0);
    CHECK(a.states.size() == 1001);
    CHECK(a.time(a.states.size() - 1) == 1.0);
    const OdePath b = integrate(OdeState(1, 0), 2.0, 0.0105, 0.001);
    CHECK(b.states.size() == 12);
    CHECK(b.step * 11 == doctest::Approx(0.0105));
  }

  SUBCASE("subcritical decay") {
    const OdePath path = integrate(OdeState(1, 0), 2.0, 30.0);
    CHECK(path.states.back().lpNorm<1>() < 1e-3);
    const OdePath half = integrate(OdeState(1, 0), 2.0, 30.0, 0.0005);
    CHECK((path.states.back() - half.states.back()).lpNorm<1>() < 1e-9);
  }

  SUBCASE("halving the step") {
    const OdePath coarse = integrate(OdeState(1, 0), 3.0, 10.0, 1e-3);
    const OdePath fine = integrate(OdeState(1, 0), 3.0, 10.0, 5e-4);
    REQUIRE(fine.states.size() == 2 * coarse.states.size() - 1);
    double worst = 0;
    for (std::size_t k = 0; k < coarse.states.size(); ++k)
      worst = std::max(worst, (coarse.states[k] - fine.states[2 * k]).cwiseAbs().maxCoeff());
    CHECK(worst <= 1e-6);
  }

  SUBCASE("invariant region") {
    RngStream rng(31, 0);
    for (double lambda : {1.0, 2.0, 4.0, 6.0}) {
      for (int i = 0; i < 100; ++i) {
        double b = rng.uniform(), g = rng.uniform();
        if (b + g > 1) {
          b = 1 - b;
          g = 1 - g;
        }
        const OdePath path = integrate(OdeState(b, g), lambda, 10.0, 1e-2);
        for (const auto& x : path.states) REQUIRE(in_simplex(x, 1e-9));
      }
    }
  }

  SUBCASE("preconditions") {
    CHECK_THROWS_AS(integrate(OdeState(1, 0), 2.0, 1.0, 0.05), DomainError);
    CHECK_THROWS_AS(integrate(OdeState(0.8, 0.5), 2.0, 1.0), DomainError);
    CHECK_THROWS_AS(integrate(OdeState(1, 0), 0.0, 1.0), DomainError);
  }

  SUBCASE("flow derivative against finite differences") {
    // d/dh of the flow along direction v at t = 0 is F(x); over a short
    // horizon the linearized flow is compared with a central difference.
    const double lambda = 3.0;
    const OdeState x(0.4, 0.3);
    const double t = 1e-3;
    const OdePath path = integrate(x, lambda, t, 1e-3);
    const OdeState exact_shift = path.states.back() - x;
    const OdeState predicted = t * vector_field(x, lambda);
    CHECK((exact_shift - predicted).norm() / predicted.norm() < 1e-2);

    const double h = 1e-6;
    for (const OdeState v : {OdeState(1, 0), OdeState(0, 1), OdeState(0.6, -0.8)}) {
      const OdeState up = integrate(OdeState(x + h * v), lambda, 0.5).states.back();
      const OdeState dn = integrate(OdeState(x - h * v), lambda, 0.5).states.back();
      const OdeState fd = (up - dn) / (2 * h);
      const OdeState up2 = integrate(OdeState(x + 2 * h * v), lambda, 0.5).states.back();
      const OdeState dn2 = integrate(OdeState(x - 2 * h * v), lambda, 0.5).states.back();
      const OdeState fd2 = (up2 - dn2) / (4 * h);
      CHECK((fd - fd2).norm() / fd.norm() <= 1e-4);

      // Direct Jacobian of F gives the t -> 0 limit of the flow derivative.
      const double eps = 1e-6;
      const OdeState jv = (vector_field(OdeState(x + eps * v), lambda) -
                           vector_field(OdeState(x - eps * v), lambda)) /
                          (2 * eps);
      const OdeState short_up = integrate(OdeState(x + h * v), lambda, 1e-3).states.back();
      const OdeState short_dn = integrate(OdeState(x - h * v), lambda, 1e-3).states.back();
      const OdeState flow_dv = ((short_up - short_dn) / (2 * h) - v) / 1e-3;
      CHECK((flow_dv - jv).norm() / jv.norm() <= 5e-3);
    }
  }
}

TEST_CASE("decay envelope") {
  SUBCASE("g_star") {
    const auto two = decay_envelope_params(2.0);
    const double lambda = 2.0;
    const double arg = (-1 + std::sqrt(1 + 2 * lambda)) / (2 * lambda);
    CHECK(arg == doctest::Approx((std::sqrt(5.0) - 1) / 4).epsilon(1e-15));
    const double closed = lambda * arg * (1 - arg) / (2 * lambda * arg + 1);
    CHECK(std::abs(two.g_star - closed) <= 1e-10);
    CHECK(two.g_star == doctest::Approx(0.1909830).epsilon(1e-6));
    CHECK(two.g_star_argmax == doctest::Approx(arg).epsilon(1e-6));
    CHECK(two.g_star < 0.5);
    CHECK(two.g_tilde == doctest::Approx(0.3454915).epsilon(1e-6));

    CHECK(std::abs(decay_envelope_params(4.0).g_star - 0.25) <= 1e-10);
    for (double l : {0.5, 1.0, 3.0, 3.9, 6.0}) {
      const double a = (-1 + std::sqrt(1 + 2 * l)) / (2 * l);
      CHECK(std::abs(decay_envelope_params(l).g_star - l * a * (1 - a) / (2 * l * a + 1)) <= 1e-10);
    }
  }

  SUBCASE("bounds") {
    const auto at0 = decay_envelope(2.0, 0.0);
    CHECK(at0.b_bound == 1.0);
    CHECK(at0.g_bound == 0.0);
    const auto at10 = decay_envelope(2.0, 10.0);
    CHECK(at10.b_bound == doctest::Approx(std::exp(-3.0902)).epsilon(1e-4));
    CHECK(at10.b_bound == doctest::Approx(0.0455).epsilon(2e-3));
    CHECK_THROWS_AS(decay_envelope(4.0, 1.0), DomainError);
    CHECK_THROWS_AS(decay_envelope(2.0, -1.0), DomainError);
  }

  SUBCASE("integrated solution stays below both bounds") {
    for (double lambda : {1.0, 2.0, 3.0, 3.9}) {
      const OdePath path = integrate(OdeState(1, 0), lambda, 20.0);
      for (std::size_t k = 0; k < path.states.size(); ++k) {
        const auto env = decay_envelope(lambda, path.time(k));
        REQUIRE(path.states[k](0) <= env.b_bound + 1e-6);
        REQUIRE(path.states[k](1) <= env.g_bound + 1e-6);
      }
    }
  }
}
