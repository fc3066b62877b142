#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "opnc/channel.hpp"
#include "opnc/lp.hpp"
#include "opnc/spn.hpp"

namespace opnc {

struct SolverFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class RegionScheme { SevenOp, FiveOp, Routing, BlockCode };
const char* region_scheme_name(RegionScheme s);
RegionScheme parse_region_scheme(const std::string& s);

struct RatePoint {
  double R1 = 0.0;
  double R2 = 0.0;
  bool operator==(const RatePoint&) const = default;
};

// { exists x >= 0 : A_eq x = B_R * R + c, A_le x <= b_le } for an arrival vector R.
struct RegionLp {
  int num_vars = 0;
  std::vector<std::string> var_names;
  std::vector<std::vector<double>> A_eq;
  std::vector<std::vector<double>> B_R;  // one row per equality, M columns
  std::vector<double> c_eq;
  std::vector<std::vector<double>> A_le;
  std::vector<double> b_le;
  double rate_bound = 1.0;  // no single flow can exceed this rate

  LpProblem problem(const std::vector<double>& R) const;
  LpResult solve(const std::vector<double>& R) const;
  // Throws SolverFailure when the backend cannot decide.
  bool feasible(const std::vector<double>& R) const;
  bool feasible(double R1, double R2) const { return feasible(std::vector<double>{R1, R2}); }
};

// Slotted region of a SPN: per-state simplex, balance weighted by state_weight.
RegionLp spn_region(const SpnSpec& spec);
// Rate-adaptation region: spec states are combos with durations T (seconds per
// packet), variables are transmissions per second, one shared time budget.
RegionLp spn_region_timed(const SpnSpec& spec, const std::vector<double>& T);
// Block-code polytope with the per-state variables x0,x9,x18,x27,x31,x63,x95 and y1..y7.
RegionLp blockcode_region(const std::vector<ReceptionVector>& ps, const std::vector<double>& f);
RegionLp blockcode_region(const ChannelSpec& ch);

RegionLp region_for(RegionScheme scheme, const ChannelSpec& ch);

bool spn_feasible(const SpnSpec& spec, const std::vector<double>& R);
bool blockcode_feasible(const ChannelSpec& ch, RatePoint R);

// Largest theta with theta * direction feasible, to absolute tolerance tol.
double boundary(const RegionLp& region, RatePoint direction, double tol = 1e-9);

// Maximizer of log R1 + log R2 by golden-section search over the boundary angle.
RatePoint prop_fair(const RegionLp& region);

// Index of variable x_code (code in {0,9,18,27,31,63,95}) for state c.
int blockcode_var(int c, int code);
// Converts a block-code witness into per-state 7-op service fractions in
// [NC1,NC2,DX1,DX2,PM,RC,CX] order.
std::vector<double> map_blockcode_witness(const std::vector<double>& x, int num_states);

struct Combo {
  double T = 1.0;
  ReceptionVector p;
  bool operator==(const Combo&) const = default;
};

enum class RaScheme { SevenOp, FiveOpAll, FiveOpFixed, Routing };
// fixed_combo is used only by FiveOpFixed.
RegionLp rate_adaptation_region(const std::vector<Combo>& combos, RaScheme scheme, int fixed_combo = -1);

}  // namespace opnc
