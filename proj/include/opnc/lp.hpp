#pragma once

#include <string>
#include <vector>

namespace opnc {

// Feasibility of  A_eq x = b_eq,  A_le x <= b_le,  x >= 0.
struct LpProblem {
  int num_vars = 0;
  std::vector<std::vector<double>> A_eq;
  std::vector<double> b_eq;
  std::vector<std::vector<double>> A_le;
  std::vector<double> b_le;

  void add_eq(std::vector<double> row, double rhs) {
    A_eq.push_back(std::move(row));
    b_eq.push_back(rhs);
  }
  void add_le(std::vector<double> row, double rhs) {
    A_le.push_back(std::move(row));
    b_le.push_back(rhs);
  }
};

enum class LpStatus { Feasible, Infeasible, Failed };

struct LpResult {
  LpStatus status = LpStatus::Failed;
  std::vector<double> x;     // witness when feasible
  double residual = 0.0;     // max constraint violation of the witness
  std::vector<double> y_eq;  // Farkas multipliers when infeasible
  std::vector<double> y_le;
  double phase1_objective = 0.0;
  int iterations = 0;
  std::string message;
};

// Dense phase-1 simplex with Bland's rule. Every feasible answer carries a
// witness with residual below tol; every infeasible answer carries a verified
// Farkas certificate. Anything else is reported as Failed.
LpResult solve_feasibility(const LpProblem& p, double tol = 1e-9);

double max_residual(const LpProblem& p, const std::vector<double>& x);

// y with A^T y <= 0 over x, y_le <= 0 and b^T y > 0 (after normalizing max|y| = 1).
bool check_farkas(const LpProblem& p, const std::vector<double>& y_eq, const std::vector<double>& y_le,
                  double tol = 1e-9);

}  // namespace opnc
