#include "opnc/capacity.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include "opnc/vnet.hpp"

namespace opnc {

const char* region_scheme_name(RegionScheme s) {
  switch (s) {
    case RegionScheme::SevenOp: return "7op";
    case RegionScheme::FiveOp: return "5op";
    case RegionScheme::Routing: return "routing";
    case RegionScheme::BlockCode: return "blockcode";
  }
  return "?";
}

RegionScheme parse_region_scheme(const std::string& s) {
  if (s == "7op" || s == "7op_q" || s == "7op_qinter" || s == "7op_ra") return RegionScheme::SevenOp;
  if (s == "5op") return RegionScheme::FiveOp;
  if (s == "routing") return RegionScheme::Routing;
  if (s == "blockcode") return RegionScheme::BlockCode;
  throw std::invalid_argument("unknown region scheme: " + s);
}

LpProblem RegionLp::problem(const std::vector<double>& R) const {
  LpProblem p;
  p.num_vars = num_vars;
  for (std::size_t i = 0; i < A_eq.size(); ++i) {
    double rhs = c_eq[i];
    for (std::size_t m = 0; m < B_R[i].size(); ++m) rhs += B_R[i][m] * R.at(m);
    p.add_eq(A_eq[i], rhs);
  }
  p.A_le = A_le;
  p.b_le = b_le;
  return p;
}

LpResult RegionLp::solve(const std::vector<double>& R) const { return solve_feasibility(problem(R)); }

bool RegionLp::feasible(const std::vector<double>& R) const {
  LpResult r = solve(R);
  if (r.status == LpStatus::Failed) throw SolverFailure("lp backend failed: " + r.message);
  return r.status == LpStatus::Feasible;
}

namespace {

RegionLp balance_region(const SpnSpec& spec, const std::vector<double>& coef, bool per_state_budget,
                        const std::vector<double>& budget_coef) {
  spec.validate();
  const int S = spec.num_states();
  const auto allowed = spec.allowed_sas();
  const int nA = static_cast<int>(allowed.size());
  RegionLp r;
  r.num_vars = S * nA;
  for (int c = 0; c < S; ++c) {
    for (int n : allowed) r.var_names.push_back("s" + std::to_string(c) + "_" + (spec.sa_names.empty() ? std::to_string(n) : spec.sa_names[n]));
  }
  for (int k = 0; k < spec.K; ++k) {
    std::vector<double> row(r.num_vars, 0.0);
    for (int c = 0; c < S; ++c) {
      for (int j = 0; j < nA; ++j) {
        int n = allowed[j];
        row[c * nA + j] = coef[c] * (spec.bin_bar[c](k, n) - spec.bout_bar[c](k, n));
      }
    }
    std::vector<double> br(spec.M, 0.0);
    for (int m = 0; m < spec.M; ++m) br[m] = spec.A(k, m);
    r.A_eq.push_back(std::move(row));
    r.B_R.push_back(std::move(br));
    r.c_eq.push_back(0.0);
  }
  if (per_state_budget) {
    for (int c = 0; c < S; ++c) {
      std::vector<double> row(r.num_vars, 0.0);
      for (int j = 0; j < nA; ++j) row[c * nA + j] = 1.0;
      r.A_le.push_back(std::move(row));
      r.b_le.push_back(1.0);
    }
  } else {
    std::vector<double> row(r.num_vars, 0.0);
    for (int c = 0; c < S; ++c) {
      for (int j = 0; j < nA; ++j) row[c * nA + j] = budget_coef[c];
    }
    r.A_le.push_back(std::move(row));
    r.b_le.push_back(1.0);
  }
  return r;
}

double max_bin(const Mat& m) { return *std::max_element(m.v.begin(), m.v.end()); }

constexpr std::array<int, 7> kCodes = {0, 9, 18, 27, 31, 63, 95};

}  // namespace

RegionLp spn_region(const SpnSpec& spec) {
  std::vector<double> f = spec.state_weight;
  if (f.empty()) f.assign(spec.num_states(), 1.0 / spec.num_states());
  RegionLp r = balance_region(spec, f, true, {});
  r.rate_bound = 0.0;
  for (int c = 0; c < spec.num_states(); ++c) r.rate_bound += f[c] * max_bin(spec.bin_bar[c]);
  return r;
}

RegionLp spn_region_timed(const SpnSpec& spec, const std::vector<double>& T) {
  if (static_cast<int>(T.size()) != spec.num_states()) throw std::invalid_argument("one duration per combo required");
  for (double t : T) if (!(t > 0)) throw std::invalid_argument("combo durations must be positive");
  RegionLp r = balance_region(spec, std::vector<double>(T.size(), 1.0), false, T);
  r.rate_bound = 0.0;
  for (int c = 0; c < spec.num_states(); ++c) r.rate_bound = std::max(r.rate_bound, max_bin(spec.bin_bar[c]) / T[c]);
  return r;
}

int blockcode_var(int c, int code) {
  auto it = std::find(kCodes.begin(), kCodes.end(), code);
  if (it == kCodes.end()) throw std::invalid_argument("unknown block-code variable");
  return c * 7 + static_cast<int>(it - kCodes.begin());
}

RegionLp blockcode_region(const std::vector<ReceptionVector>& ps, const std::vector<double>& f) {
  const int S = static_cast<int>(ps.size());
  if (S == 0 || f.size() != ps.size()) throw std::invalid_argument("blockcode region needs one weight per state");
  RegionLp r;
  r.num_vars = 7 * S + 7;
  for (int c = 0; c < S; ++c) {
    for (int code : kCodes) r.var_names.push_back("x" + std::to_string(code) + "_" + std::to_string(c));
  }
  for (int j = 1; j <= 7; ++j) r.var_names.push_back("y" + std::to_string(j));
  auto y = [&](int j) { return 7 * S + j - 1; };

  enum Marg { D1, D2, ANY };
  auto prob = [&](int c, Marg m) {
    return m == D1 ? ps[c].p_d1() : m == D2 ? ps[c].p_d2() : ps[c].p_any();
  };
  // y_j - sum_c f_c (sum of listed x) p^[c] = R-term
  auto define = [&](int j, std::initializer_list<int> codes, Marg m, double r1, double r2) {
    std::vector<double> row(r.num_vars, 0.0);
    row[y(j)] = 1.0;
    for (int c = 0; c < S; ++c) {
      for (int code : codes) row[blockcode_var(c, code)] -= f[c] * prob(c, m);
    }
    r.A_eq.push_back(std::move(row));
    r.B_R.push_back({r1, r2});
    r.c_eq.push_back(0.0);
  };
  define(1, {0, 9, 18, 27, 31, 63}, D1, 0, 0);
  define(2, {0, 9, 18, 27, 31, 95}, D2, 0, 0);
  define(3, {0, 9}, D1, 1, 0);
  define(4, {0, 18}, D2, 0, 1);
  define(5, {0, 9, 18, 27}, ANY, 0, 0);
  define(6, {0, 9}, ANY, 1, 0);
  define(7, {0, 18}, ANY, 0, 1);
  auto link = [&](int a, int b) {
    std::vector<double> row(r.num_vars, 0.0);
    row[y(a)] = 1.0;
    row[y(b)] = -1.0;
    r.A_eq.push_back(std::move(row));
    r.B_R.push_back({0, 0});
    r.c_eq.push_back(0.0);
  };
  link(1, 3);
  link(2, 4);
  for (int j : {5, 6, 7}) {
    std::vector<double> row(r.num_vars, 0.0);
    row[y(j)] = 1.0;
    r.A_eq.push_back(std::move(row));
    r.B_R.push_back({1, 1});
    r.c_eq.push_back(0.0);
  }
  for (int c = 0; c < S; ++c) {
    std::vector<double> row(r.num_vars, 0.0);
    for (int code : kCodes) row[blockcode_var(c, code)] = 1.0;
    r.A_le.push_back(std::move(row));
    r.b_le.push_back(1.0);
  }
  r.rate_bound = 0.0;
  for (int c = 0; c < S; ++c) r.rate_bound += f[c] * ps[c].p_any();
  return r;
}

RegionLp blockcode_region(const ChannelSpec& ch) {
  ch.validate();
  std::vector<ReceptionVector> ps;
  for (const auto& s : ch.states) ps.push_back(s.p);
  return blockcode_region(ps, ch.freqs());
}

RegionLp region_for(RegionScheme scheme, const ChannelSpec& ch) {
  switch (scheme) {
    case RegionScheme::SevenOp: return spn_region(build_7op_spec(ch));
    case RegionScheme::FiveOp: return spn_region(build_5op_spec(ch));
    case RegionScheme::Routing: return spn_region(build_routing_spec(ch));
    case RegionScheme::BlockCode: return blockcode_region(ch);
  }
  throw std::invalid_argument("unknown scheme");
}

bool spn_feasible(const SpnSpec& spec, const std::vector<double>& R) { return spn_region(spec).feasible(R); }

bool blockcode_feasible(const ChannelSpec& ch, RatePoint R) { return blockcode_region(ch).feasible(R.R1, R.R2); }

double boundary(const RegionLp& region, RatePoint d, double tol) {
  if (!(d.R1 >= 0 && d.R2 >= 0) || d.R1 + d.R2 <= 0) throw std::invalid_argument("direction must be nonzero and nonnegative");
  if (!region.feasible(0.0, 0.0)) throw SolverFailure("region does not contain the origin");
  double lo = 0.0;
  double hi = 2.0 * region.rate_bound / (d.R1 + d.R2);
  if (!(hi > 0)) return 0.0;
  for (int i = 0; region.feasible(hi * d.R1, hi * d.R2); ++i) {
    if (i > 60) throw SolverFailure("region unbounded along direction");
    lo = hi;
    hi *= 2.0;
  }
  while (hi - lo > tol) {
    double mid = 0.5 * (lo + hi);
    if (region.feasible(mid * d.R1, mid * d.R2)) lo = mid;
    else hi = mid;
  }
  if (lo > 0 && !region.feasible(0.5 * lo * d.R1, 0.5 * lo * d.R2)) {
    throw SolverFailure("feasibility is not monotone along the ray");
  }
  return lo;
}

RatePoint prop_fair(const RegionLp& region) {
  auto point = [&](double phi) {
    double th = boundary(region, {std::cos(phi), std::sin(phi)}, 1e-11);
    return RatePoint{th * std::cos(phi), th * std::sin(phi)};
  };
  auto score = [&](double phi) {
    RatePoint p = point(phi);
    if (p.R1 <= 0 || p.R2 <= 0) return -std::numeric_limits<double>::infinity();
    return std::log(p.R1) + std::log(p.R2);
  };
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = 1e-6, b = std::numbers::pi / 2 - 1e-6;
  double c = b - g * (b - a), e = a + g * (b - a);
  double fc = score(c), fe = score(e);
  while (b - a > 1e-9) {
    if (fc >= fe) {
      b = e;
      e = c;
      fe = fc;
      c = b - g * (b - a);
      fc = score(c);
    } else {
      a = c;
      c = e;
      fc = fe;
      e = a + g * (b - a);
      fe = score(e);
    }
  }
  RatePoint best = point(0.5 * (a + b));
  if (best.R1 <= 0 || best.R2 <= 0) throw SolverFailure("region has empty interior");
  return best;
}

std::vector<double> map_blockcode_witness(const std::vector<double>& x, int S) {
  std::vector<double> s;
  s.reserve(7 * S);
  for (int c = 0; c < S; ++c) {
    for (int code : {18, 9, 63, 95, 0, 27, 31}) s.push_back(x.at(blockcode_var(c, code)));
  }
  return s;
}

RegionLp rate_adaptation_region(const std::vector<Combo>& combos, RaScheme scheme, int fixed_combo) {
  if (combos.empty()) throw std::invalid_argument("need at least one combo");
  std::vector<ReceptionVector> ps;
  std::vector<double> T;
  for (std::size_t i = 0; i < combos.size(); ++i) {
    if (scheme == RaScheme::FiveOpFixed && static_cast<int>(i) != fixed_combo) continue;
    ps.push_back(combos[i].p);
    T.push_back(combos[i].T);
  }
  if (ps.empty()) throw std::invalid_argument("fixed combo index out of range");
  std::vector<double> w(ps.size(), 1.0);
  switch (scheme) {
    case RaScheme::SevenOp: return spn_region_timed(build_7op_spec(ps, w), T);
    case RaScheme::FiveOpAll:
    case RaScheme::FiveOpFixed: return spn_region_timed(build_5op_spec(ps, w), T);
    case RaScheme::Routing: return spn_region_timed(build_routing_spec(ps, w), T);
  }
  throw std::invalid_argument("unknown rate-adaptation scheme");
}

}  // namespace opnc
