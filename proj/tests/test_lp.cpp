#include "doctest.h"
#include "opnc/lp.hpp"
#include "opnc/rng.hpp"

using namespace opnc;

TEST_CASE("simple feasible system returns a witness") {
  LpProblem p;
  p.num_vars = 3;
  p.add_eq({1, 1, 1}, 1);
  p.add_le({1, 0, 0}, 0.2);
  p.add_le({0, -1, 0}, -0.5);  // x2 >= 0.5
  LpResult r = solve_feasibility(p);
  REQUIRE(r.status == LpStatus::Feasible);
  CHECK(r.residual < 1e-9);
  CHECK(max_residual(p, r.x) < 1e-9);
  CHECK(r.x[1] >= 0.5 - 1e-9);
}

TEST_CASE("infeasible system returns a Farkas certificate") {
  LpProblem p;
  p.num_vars = 2;
  p.add_eq({1, 1}, 1);
  p.add_le({1, 1}, 0.9);
  LpResult r = solve_feasibility(p);
  REQUIRE(r.status == LpStatus::Infeasible);
  CHECK(check_farkas(p, r.y_eq, r.y_le));
  CHECK(r.phase1_objective > 0.05);
}

TEST_CASE("negative right-hand sides") {
  LpProblem p;
  p.num_vars = 2;
  p.add_eq({-1, -1}, -2);
  p.add_le({-1, 0}, -1.5);
  LpResult r = solve_feasibility(p);
  REQUIRE(r.status == LpStatus::Feasible);
  CHECK(r.x[0] >= 1.5 - 1e-9);
  CHECK(r.x[0] + r.x[1] == doctest::Approx(2.0));

  p.add_le({0, -1}, -0.6);
  LpResult bad = solve_feasibility(p);
  REQUIRE(bad.status == LpStatus::Infeasible);
  CHECK(check_farkas(p, bad.y_eq, bad.y_le));
}

TEST_CASE("degenerate and empty systems") {
  LpProblem none;
  none.num_vars = 2;
  CHECK(solve_feasibility(none).status == LpStatus::Feasible);

  LpProblem zero;
  zero.num_vars = 2;
  zero.add_eq({0, 0}, 0);
  zero.add_eq({1, 1}, 0);
  zero.add_eq({2, 2}, 0);  // redundant
  LpResult r = solve_feasibility(zero);
  REQUIRE(r.status == LpStatus::Feasible);
  CHECK(r.x[0] == doctest::Approx(0.0));

  LpProblem contradiction;
  contradiction.num_vars = 1;
  contradiction.add_eq({0}, 1);
  LpResult c = solve_feasibility(contradiction);
  REQUIRE(c.status == LpStatus::Infeasible);
  CHECK(check_farkas(contradiction, c.y_eq, c.y_le));
}

TEST_CASE("certificate checker rejects a wrong certificate") {
  LpProblem p;
  p.num_vars = 2;
  p.add_eq({1, 1}, 1);
  p.add_le({1, 1}, 0.9);
  CHECK_FALSE(check_farkas(p, {-1}, {-1}));  // b^T y < 0
  CHECK_FALSE(check_farkas(p, {1}, {1}));     // y_le must be <= 0
  CHECK_FALSE(check_farkas(p, {0}, {0}));
}

TEST_CASE("random systems: every answer is certified") {
  Rng rng(17);
  int feasible = 0, infeasible = 0;
  for (int trial = 0; trial < 300; ++trial) {
    LpProblem p;
    p.num_vars = 2 + static_cast<int>(rng.next() % 5);
    int me = static_cast<int>(rng.next() % 3), ml = 1 + static_cast<int>(rng.next() % 4);
    for (int i = 0; i < me; ++i) {
      std::vector<double> row(p.num_vars);
      for (auto& v : row) v = rng.u01() * 2 - 0.5;
      p.add_eq(row, rng.u01() * 2 - 0.5);
    }
    for (int i = 0; i < ml; ++i) {
      std::vector<double> row(p.num_vars);
      for (auto& v : row) v = rng.u01() * 2 - 1;
      p.add_le(row, rng.u01() * 2 - 1);
    }
    LpResult r = solve_feasibility(p);
    REQUIRE(r.status != LpStatus::Failed);
    if (r.status == LpStatus::Feasible) {
      ++feasible;
      for (double v : r.x) CHECK(v >= -1e-12);
      CHECK(max_residual(p, r.x) < 1e-9);
    } else {
      ++infeasible;
      CHECK(check_farkas(p, r.y_eq, r.y_le));
    }
  }
  CHECK(feasible > 20);
  CHECK(infeasible > 20);
}
