#include <cmath>
#include <random>

#include "doctest.h"
#include "scdn/errors.hpp"
#include "scdn/gp_core.hpp"

using namespace scdn;

namespace {

Monomial mono(double c, std::map<int, double> e) { return Monomial{c, std::move(e)}; }

Posynomial random_posy(std::mt19937_64& rng, int vars) {
  std::uniform_int_distribution<int> nterms(1, 5);
  std::uniform_real_distribution<double> coef(0.1, 10.0), ex(-2.0, 2.0);
  Posynomial p;
  const int k = nterms(rng);
  for (int t = 0; t < k; ++t) {
    Monomial m;
    m.coef = coef(rng);
    for (int v = 0; v < vars; ++v) m.exps[v] = ex(rng);
    p.add(m);
  }
  return p;
}

}  // namespace

TEST_CASE("eval of monomials and posynomials") {
  CHECK(eval(mono(3.0, {{0, 2.0}, {1, -1.0}}), Point{2.0, 4.0}) == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(eval(Posynomial(Monomial::constant(5.0)), Point{0.3, 7.0}) == 5.0);
  Posynomial p = Posynomial(Monomial::var(0)) + Posynomial(Monomial::var(0, -1.0));
  CHECK(eval(p, Point{1.0}) == 2.0);
  CHECK_THROWS_AS(eval(p, Point{0.0}), Error);
}

TEST_CASE("condense of x + 1/x at 1 is the constant 2") {
  Posynomial p = Posynomial(Monomial::var(0)) + Posynomial(Monomial::var(0, -1.0));
  Monomial h = condense(p, Point{1.0});
  CHECK(h.coef == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(h.exps.empty());
}

TEST_CASE("condense of a single monomial returns it") {
  Monomial m = mono(2.5, {{0, 1.5}, {1, -0.5}});
  Monomial h = condense(Posynomial(m), Point{0.7, 3.0});
  CHECK(h.coef == doctest::Approx(2.5).epsilon(1e-14));
  CHECK(h.exps.at(0) == doctest::Approx(1.5));
  CHECK(h.exps.at(1) == doctest::Approx(-0.5));
}

TEST_CASE("condense underestimates and touches at the anchor") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> lx(-3.0, 3.0);
  for (int trial = 0; trial < 20; ++trial) {
    Posynomial p = random_posy(rng, 4);
    Point anchor(4);
    for (auto& a : anchor) a = std::exp(lx(rng));
    Monomial h = condense(p, anchor);
    CHECK(eval(h, anchor) == doctest::Approx(eval(p, anchor)).epsilon(1e-10));
    for (int s = 0; s < 200; ++s) {
      Point x(4);
      for (auto& v : x) v = std::exp(lx(rng));
      CHECK(eval(h, x) <= eval(p, x) * (1.0 + 1e-12));
    }
  }
}

TEST_CASE("convex form: monomial objective is affine, bounds become a box") {
  GpProblem g;
  const int x = g.add_var("x", 0.5, 4.0);
  const int y = g.add_var("y", 1.0, 2.0);
  g.objective = Posynomial(mono(3.0, {{x, 2.0}, {y, -1.0}}));
  ConvexProgram cp = to_convex_form(g);
  REQUIRE(cp.objective.terms.size() == 1);
  CHECK(cp.objective.terms[0].b == doctest::Approx(std::log(3.0)));
  Eigen::VectorXd z(2);
  z << 0.3, -0.2;
  CHECK(cp.objective.value(z) == doctest::Approx(std::log(3.0) + 0.6 + 0.2));
  CHECK(cp.lo(0) == doctest::Approx(std::log(0.5)));
  CHECK(cp.hi(1) == doctest::Approx(std::log(2.0)));
}

TEST_CASE("solve: bound-style constraint active") {
  GpProblem g;
  const int x = g.add_var("x", 0.1, 10.0);
  g.objective = Posynomial(Monomial::var(x));
  g.add_ineq(Posynomial(mono(2.0, {{x, -1.0}})));
  SolveReport r = solve(g, Point{5.0});
  REQUIRE(r.converged);
  CHECK(r.x[x] == doctest::Approx(2.0).epsilon(1e-4));
  CHECK(r.objective == doctest::Approx(2.0).epsilon(1e-4));
  CHECK(r.max_violation <= 1e-6);
}

TEST_CASE("solve: x + y with xy >= 1") {
  GpProblem g;
  const int x = g.add_var("x", 1e-3, 1e3);
  const int y = g.add_var("y", 1e-3, 1e3);
  g.objective = Posynomial(Monomial::var(x)) + Posynomial(Monomial::var(y));
  g.add_ineq(Posynomial(mono(1.0, {{x, -1.0}, {y, -1.0}})));
  SolveReport r = solve(g, Point{3.0, 4.0});
  REQUIRE(r.converged);
  CHECK(r.x[x] == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(r.x[y] == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(r.objective == doctest::Approx(2.0).epsilon(1e-4));
}

TEST_CASE("solve: monomial equality constraint") {
  GpProblem g;
  const int x = g.add_var("x", 1e-3, 1e3);
  const int y = g.add_var("y", 1e-3, 1e3);
  g.objective = Posynomial(Monomial::var(x)) + Posynomial(mono(4.0, {{y, 1.0}}));
  g.eq.push_back(mono(0.25, {{x, 1.0}, {y, 1.0}}));
  SolveReport r = solve(g, Point{1.0, 1.0});
  REQUIRE(r.converged);
  // x y = 4, min x + 4y -> x = 4, y = 1
  CHECK(r.x[x] == doctest::Approx(4.0).epsilon(1e-4));
  CHECK(r.objective == doctest::Approx(8.0).epsilon(1e-4));
}

TEST_CASE("solve: exponential objective term") {
  GpProblem g;
  const int x = g.add_var("x", 0.01, 10.0);
  g.objective = Posynomial(Monomial::var(x, -1.0));
  g.objective_exp.push_back(ExpTerm{1.0, x, 1.0});
  SolveReport r = solve(g, Point{3.0});
  REQUIRE(r.converged);
  // stationarity e^x = 1/x^2, solved by bisection
  double lo = 0.01, hi = 10.0;
  for (int i = 0; i < 200; ++i) {
    const double m = 0.5 * (lo + hi);
    (std::exp(m) - 1.0 / (m * m) > 0.0 ? hi : lo) = m;
  }
  CHECK(r.x[x] == doctest::Approx(lo).epsilon(1e-5));
}

TEST_CASE("solve: infeasible problem is reported, not thrown") {
  GpProblem g;
  const int x = g.add_var("x", 0.1, 10.0);
  g.objective = Posynomial(Monomial::var(x));
  g.add_ineq(Posynomial(Monomial::var(x)));                 // x <= 1
  g.add_ineq(Posynomial(mono(2.0, {{x, -1.0}})));           // x >= 2
  SolveReport r = solve(g, Point{1.5});
  CHECK_FALSE(r.converged);
  CHECK(r.status == SolveStatus::Infeasible);
  CHECK(r.max_violation > 0.0);
}

TEST_CASE("solve: infeasible start reaches the feasible optimum through phase 1") {
  GpProblem g;
  const int x = g.add_var("x", 0.1, 10.0);
  const int y = g.add_var("y", 0.1, 10.0);
  g.objective = Posynomial(mono(1.0, {{x, 1.0}, {y, 2.0}}));
  g.add_ineq(Posynomial(mono(4.0, {{x, -1.0}, {y, -1.0}})));
  g.add_ineq(Posynomial(mono(0.25, {{x, 1.0}})));
  SolveReport r = solve(g, Point{0.2, 0.2});
  REQUIRE(r.converged);
  CHECK(r.objective == doctest::Approx(4.0).epsilon(1e-4));
  CHECK(r.max_violation <= 1e-6);
}

TEST_CASE("solve is deterministic and improves on a feasible init") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    GpProblem g;
    for (int v = 0; v < 3; ++v) g.add_var("v" + std::to_string(v), 1e-2, 1e2);
    g.objective = random_posy(rng, 3);
    for (int c = 0; c < 3; ++c) {
      Posynomial p = random_posy(rng, 3);
      // scale so the init point is strictly feasible
      const double v = eval(p, Point{1.0, 1.0, 1.0});
      g.add_ineq((0.5 / v) * p);
    }
    const Point init{1.0, 1.0, 1.0};
    SolveReport a = solve(g, init);
    SolveReport b = solve(g, init);
    REQUIRE(a.converged);
    CHECK(a.x == b.x);
    CHECK(a.objective == b.objective);
    CHECK(a.objective <= g.objective_value(init) * (1.0 + 1e-8));
    CHECK(a.max_violation <= 1e-6);
  }
}

TEST_CASE("dump lists one term per line") {
  GpProblem g;
  const int x = g.add_var("x", 0.1, 10.0);
  g.objective = Posynomial(mono(2.0, {{x, -1.0}}));
  const std::string d = g.dump();
  CHECK(d.find("2 x^-1\n") != std::string::npos);
}
