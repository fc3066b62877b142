#include <cmath>

#include "doctest.h"
#include "opnc/capacity.hpp"
#include "opnc/rng.hpp"
#include "opnc/vnet.hpp"

using namespace opnc;

namespace {

ChannelSpec two_state_channel() {
  ChannelSpec ch;
  ch.states = {{1, 0.5, {0, 0.5, 0.5, 0}}, {2, 0.5, {0, 0, 0, 1}}};
  return ch;
}

ChannelSpec four_state_channel(const std::array<double, 4>& f) {
  ChannelSpec ch;
  ch.states = {{1, f[0], {0.14, 0.06, 0.56, 0.24}},
               {2, f[1], {0.14, 0.56, 0.06, 0.24}},
               {3, f[2], {0.04, 0.16, 0.16, 0.64}},
               {4, f[3], {0.49, 0.21, 0.21, 0.09}}};
  return ch;
}

std::vector<Combo> ra_combos() {
  return {{1.0, {0.1 * 0.05, 0.95 * 0.1, 0.05 * 0.9, 0.95 * 0.9}}, {1.0 / 3, {0.6 * 0.8, 0.8 * 0.4, 0.2 * 0.6, 0.2 * 0.4}}};
}

double sym_sum(RegionScheme s, const ChannelSpec& ch) { return 2 * boundary(region_for(s, ch), {1, 1}); }

ChannelSpec random_channel(Rng& rng) {
  ChannelSpec ch;
  int S = 2 + static_cast<int>(rng.next() % 3);
  double tot = 0;
  for (int c = 0; c < S; ++c) {
    std::array<double, 4> v{};
    double s = 0;
    for (auto& x : v) s += (x = rng.u01() + 0.01);
    for (auto& x : v) x /= s;
    double f = 0.2 + rng.u01();
    tot += f;
    ch.states.push_back({c, f, ReceptionVector::from_array(v)});
  }
  for (auto& st : ch.states) st.freq /= tot;
  return ch;
}

}  // namespace

TEST_CASE("two-state channel goldens") {
  ChannelSpec ch = two_state_channel();
  CHECK(sym_sum(RegionScheme::SevenOp, ch) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(sym_sum(RegionScheme::FiveOp, ch) == doctest::Approx(0.875).epsilon(1e-6));
  CHECK(sym_sum(RegionScheme::Routing, ch) == doctest::Approx(0.75).epsilon(1e-6));
  CHECK(sym_sum(RegionScheme::BlockCode, ch) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("four-state channel goldens") {
  ChannelSpec a = four_state_channel({0.15, 0.15, 0.35, 0.35});
  ChannelSpec b = four_state_channel({0.25, 0.25, 0.25, 0.25});
  CHECK(std::abs(sym_sum(RegionScheme::SevenOp, a) - 0.716) < 1e-3);
  CHECK(std::abs(sym_sum(RegionScheme::SevenOp, b) - 0.7478) < 1e-3);
  CHECK(std::abs(sym_sum(RegionScheme::Routing, a) - 0.625) < 1e-3);
  CHECK(std::abs(sym_sum(RegionScheme::Routing, b) - 0.675) < 1e-3);
  // frozen from this solver
  CHECK(sym_sum(RegionScheme::SevenOp, a) == doctest::Approx(0.715909).epsilon(1e-5));
  CHECK(sym_sum(RegionScheme::SevenOp, b) == doctest::Approx(0.747727).epsilon(1e-5));
}

TEST_CASE("single-state routing region has a closed form") {
  // Routing with marginals q1, q2: R1/q1 + R2/q2 <= 1.
  ChannelSpec ch;
  ch.states = {{1, 1.0, vector_from_marginals(0.6, 0.3)}};
  RegionLp r = region_for(RegionScheme::Routing, ch);
  double theta = boundary(r, {1, 1});
  CHECK(theta == doctest::Approx(1.0 / (1 / 0.6 + 1 / 0.3)).epsilon(1e-8));
  CHECK(boundary(r, {1, 0}) == doctest::Approx(0.6).epsilon(1e-8));
}

TEST_CASE("regions are nested: routing, 5-op, 7-op") {
  Rng rng(3);
  for (int trial = 0; trial < 15; ++trial) {
    ChannelSpec ch = random_channel(rng);
    RatePoint d{0.1 + rng.u01(), 0.1 + rng.u01()};
    double r = boundary(region_for(RegionScheme::Routing, ch), d);
    double f = boundary(region_for(RegionScheme::FiveOp, ch), d);
    double s = boundary(region_for(RegionScheme::SevenOp, ch), d);
    CHECK(r <= f + 1e-7);
    CHECK(f <= s + 1e-7);
  }
}

TEST_CASE("block-code and 7-op regions coincide, and witnesses map across") {
  Rng rng(21);
  for (int trial = 0; trial < 10; ++trial) {
    ChannelSpec ch = random_channel(rng);
    RegionLp bc = region_for(RegionScheme::BlockCode, ch);
    SpnSpec spec = build_7op_spec(ch);
    RegionLp sp = spn_region(spec);
    for (int k = 0; k < 4; ++k) {
      double ang = (k + 0.5) * M_PI / 8;
      RatePoint d{std::cos(ang), std::sin(ang)};
      double a = boundary(bc, d), b = boundary(sp, d);
      CHECK(std::abs(a - b) < 1e-6);
      std::vector<double> R{0.98 * a * d.R1, 0.98 * a * d.R2};
      LpResult w = bc.solve(R);
      REQUIRE(w.status == LpStatus::Feasible);
      auto s = map_blockcode_witness(w.x, static_cast<int>(ch.states.size()));
      CHECK(max_residual(sp.problem(R), s) < 1e-9);
    }
  }
}

TEST_CASE("rate-adaptation numbers") {
  auto combos = ra_combos();
  RegionLp full = rate_adaptation_region(combos, RaScheme::SevenOp);
  RatePoint pf = prop_fair(full);
  CHECK(std::abs(pf.R1 - 0.6508) < 1e-3);
  CHECK(std::abs(pf.R2 - 0.5245) < 1e-3);
  // pf lies on the boundary
  CHECK(boundary(full, pf) == doctest::Approx(1.0).epsilon(1e-6));

  auto sum_at = [&](const RegionLp& r) { return boundary(r, pf) * (pf.R1 + pf.R2); };
  CHECK(std::abs(sum_at(rate_adaptation_region(combos, RaScheme::Routing)) - 1.0446) < 2e-3);
  CHECK(std::abs(sum_at(rate_adaptation_region(combos, RaScheme::FiveOpFixed, 0)) - 0.9503) < 2e-3);
  CHECK(std::abs(sum_at(rate_adaptation_region(combos, RaScheme::FiveOpFixed, 1)) - 0.9102) < 2e-3);
  CHECK_THROWS(rate_adaptation_region(combos, RaScheme::FiveOpFixed, 2));
}

TEST_CASE("prop-fair point of a symmetric region is symmetric") {
  ChannelSpec ch;
  ch.states = {{1, 1.0, vector_from_marginals(0.5, 0.5)}};
  RatePoint pf = prop_fair(region_for(RegionScheme::Routing, ch));
  CHECK(pf.R1 == doctest::Approx(0.25).epsilon(1e-4));
  CHECK(pf.R2 == doctest::Approx(0.25).epsilon(1e-4));
}

TEST_CASE("region feasibility answers") {
  ChannelSpec ch = two_state_channel();
  CHECK(blockcode_feasible(ch, {0.49, 0.49}));
  CHECK_FALSE(blockcode_feasible(ch, {0.51, 0.51}));
  SpnSpec s7 = build_7op_spec(ch);
  CHECK(spn_feasible(s7, {0.49, 0.49}));
  CHECK_FALSE(spn_feasible(s7, {0.51, 0.51}));
  CHECK(spn_feasible(s7, {0, 0}));
  CHECK(parse_region_scheme(region_scheme_name(RegionScheme::FiveOp)) == RegionScheme::FiveOp);
  CHECK_THROWS(parse_region_scheme("8op"));
}
