#include "opnc/lp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace opnc {

namespace {

constexpr double kPivotEps = 1e-11;
constexpr double kCostEps = 1e-12;

}  // namespace

double max_residual(const LpProblem& p, const std::vector<double>& x) {
  double worst = 0.0;
  for (double v : x) worst = std::max(worst, -v);
  for (std::size_t i = 0; i < p.A_eq.size(); ++i) {
    double s = 0.0;
    for (int j = 0; j < p.num_vars; ++j) s += p.A_eq[i][j] * x[j];
    worst = std::max(worst, std::abs(s - p.b_eq[i]));
  }
  for (std::size_t i = 0; i < p.A_le.size(); ++i) {
    double s = 0.0;
    for (int j = 0; j < p.num_vars; ++j) s += p.A_le[i][j] * x[j];
    worst = std::max(worst, s - p.b_le[i]);
  }
  return worst;
}

bool check_farkas(const LpProblem& p, const std::vector<double>& y_eq, const std::vector<double>& y_le, double tol) {
  double scale = 0.0;
  for (double v : y_eq) scale = std::max(scale, std::abs(v));
  for (double v : y_le) scale = std::max(scale, std::abs(v));
  if (scale == 0.0) return false;
  for (double v : y_le) if (v / scale > tol) return false;
  for (int j = 0; j < p.num_vars; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < p.A_eq.size(); ++i) s += p.A_eq[i][j] * y_eq[i];
    for (std::size_t i = 0; i < p.A_le.size(); ++i) s += p.A_le[i][j] * y_le[i];
    if (s / scale > tol) return false;
  }
  double by = 0.0;
  for (std::size_t i = 0; i < p.b_eq.size(); ++i) by += p.b_eq[i] * y_eq[i];
  for (std::size_t i = 0; i < p.b_le.size(); ++i) by += p.b_le[i] * y_le[i];
  return by / scale > 1e-12;
}

LpResult solve_feasibility(const LpProblem& p, double tol) {
  const int n = p.num_vars;
  const int meq = static_cast<int>(p.A_eq.size());
  const int mle = static_cast<int>(p.A_le.size());
  const int m = meq + mle;
  if (static_cast<int>(p.b_eq.size()) != meq || static_cast<int>(p.b_le.size()) != mle) {
    throw std::invalid_argument("lp: rhs size mismatch");
  }
  for (const auto& r : p.A_eq) if (static_cast<int>(r.size()) != n) throw std::invalid_argument("lp: row size mismatch");
  for (const auto& r : p.A_le) if (static_cast<int>(r.size()) != n) throw std::invalid_argument("lp: row size mismatch");

  LpResult res;
  if (m == 0) {
    res.status = LpStatus::Feasible;
    res.x.assign(n, 0.0);
    return res;
  }

  const int art0 = n + mle;
  const int cols = art0 + m;
  const int rhs = cols;
  const int W = cols + 1;
  std::vector<double> T(static_cast<std::size_t>(m + 1) * W, 0.0);
  auto at = [&](int i, int j) -> double& { return T[static_cast<std::size_t>(i) * W + j]; };
  std::vector<double> sigma(m, 1.0);
  std::vector<int> basis(m);

  for (int i = 0; i < m; ++i) {
    const bool eq = i < meq;
    const auto& row = eq ? p.A_eq[i] : p.A_le[i - meq];
    const double b = eq ? p.b_eq[i] : p.b_le[i - meq];
    sigma[i] = b < 0 ? -1.0 : 1.0;
    for (int j = 0; j < n; ++j) at(i, j) = sigma[i] * row[j];
    if (!eq) at(i, n + (i - meq)) = sigma[i];
    at(i, art0 + i) = 1.0;
    at(i, rhs) = sigma[i] * b;
    basis[i] = art0 + i;
  }
  for (int j = 0; j <= rhs; ++j) {
    if (j >= art0 && j < cols) continue;
    double s = 0.0;
    for (int i = 0; i < m; ++i) s += at(i, j);
    at(m, j) = -s;
  }

  const int max_iter = 100000;
  int it = 0;
  for (; it < max_iter; ++it) {
    int enter = -1;
    for (int j = 0; j < art0; ++j) {
      if (at(m, j) < -kCostEps) {
        enter = j;
        break;
      }
    }
    if (enter < 0) break;
    int leave = -1;
    double best = 0.0;
    for (int i = 0; i < m; ++i) {
      double a = at(i, enter);
      if (a <= kPivotEps) continue;
      double ratio = at(i, rhs) / a;
      if (leave < 0 || ratio < best - 1e-15 || (std::abs(ratio - best) <= 1e-15 && basis[i] < basis[leave])) {
        leave = i;
        best = ratio;
      }
    }
    if (leave < 0) {
      // Unbounded direction in a phase-1 problem cannot happen; treat as numerical failure.
      res.status = LpStatus::Failed;
      res.message = "phase-1 ratio test found no pivot";
      return res;
    }
    const double piv = at(leave, enter);
    for (int j = 0; j <= rhs; ++j) at(leave, j) /= piv;
    for (int i = 0; i <= m; ++i) {
      if (i == leave) continue;
      double f = at(i, enter);
      if (f == 0.0) continue;
      for (int j = 0; j <= rhs; ++j) at(i, j) -= f * at(leave, j);
    }
    basis[leave] = enter;
  }
  res.iterations = it;
  if (it == max_iter) {
    res.status = LpStatus::Failed;
    res.message = "simplex iteration limit";
    return res;
  }

  res.phase1_objective = -at(m, rhs);
  if (res.phase1_objective <= tol) {
    res.x.assign(n, 0.0);
    for (int i = 0; i < m; ++i) {
      if (basis[i] < n) res.x[basis[i]] = std::max(0.0, at(i, rhs));
    }
    res.residual = max_residual(p, res.x);
    if (res.residual < tol) {
      res.status = LpStatus::Feasible;
    } else {
      res.status = LpStatus::Failed;
      res.message = "witness residual above tolerance";
    }
    return res;
  }

  res.y_eq.assign(meq, 0.0);
  res.y_le.assign(mle, 0.0);
  for (int i = 0; i < m; ++i) {
    double w = 1.0 - at(m, art0 + i);
    if (i < meq) res.y_eq[i] = sigma[i] * w;
    else res.y_le[i - meq] = sigma[i] * w;
  }
  if (check_farkas(p, res.y_eq, res.y_le, tol)) {
    res.status = LpStatus::Infeasible;
  } else {
    res.status = LpStatus::Failed;
    res.message = "infeasibility certificate did not verify";
  }
  return res;
}

}  // namespace opnc
