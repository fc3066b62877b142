#include "opnc/verify.hpp"

#include <cmath>
#include <functional>
#include <sstream>
#include <stdexcept>

#include "opnc/capacity.hpp"
#include "opnc/lp.hpp"
#include "opnc/receiver.hpp"
#include "opnc/sim.hpp"
#include "opnc/vnet.hpp"

namespace opnc {

Fault parse_fault(const std::string& s) {
  if (s.empty() || s == "none") return Fault::None;
  if (s == "table1") return Fault::Table1;
  if (s == "bout") return Fault::Bout;
  throw std::invalid_argument("unknown fault '" + s + "' (expected none, table1 or bout)");
}

namespace {

using Check = std::function<std::string()>;  // empty string means pass

// Expected matrices for independent marginals (0.5, 0.7) and (2/3, 1/3), rows
// [Q1E, Q2E, Q1_2, Q2_1, QMIX], columns [NC1, NC2, DX1, DX2, PM, RC, CX].
struct Golden {
  double q1, q2;
  double bin[5][7];
  double bout[5][7];
};

const Golden kGoldens[] = {
    {0.5,
     0.7,
     {{0.85, 0, 0, 0, 0.85, 0, 0},
      {0, 0.85, 0, 0, 0.85, 0, 0},
      {0, 0, 0.5, 0, 0, 0, 0.5},
      {0, 0, 0, 0.7, 0, 0, 0.7},
      {0, 0, 0, 0, 0, 0.85, 0}},
     {{0, 0, 0, 0, 0, 0, 0},
      {0, 0, 0, 0, 0, 0, 0},
      {0.35, 0, 0, 0, 0, 0.35, 0},
      {0, 0.15, 0, 0, 0, 0.15, 0},
      {0, 0, 0, 0, 0.85, 0, 0}}},
    {2.0 / 3,
     1.0 / 3,
     {{7.0 / 9, 0, 0, 0, 7.0 / 9, 0, 0},
      {0, 7.0 / 9, 0, 0, 7.0 / 9, 0, 0},
      {0, 0, 2.0 / 3, 0, 0, 0, 2.0 / 3},
      {0, 0, 0, 1.0 / 3, 0, 0, 1.0 / 3},
      {0, 0, 0, 0, 0, 7.0 / 9, 0}},
     {{0, 0, 0, 0, 0, 0, 0},
      {0, 0, 0, 0, 0, 0, 0},
      {1.0 / 9, 0, 0, 0, 0, 1.0 / 9, 0},
      {0, 4.0 / 9, 0, 0, 0, 4.0 / 9, 0},
      {0, 0, 0, 0, 7.0 / 9, 0, 0}}},
};

std::string check_matrices(Fault fault) {
  for (const auto& g : kGoldens) {
    auto [bin, bout] = build_matrices(vector_from_marginals(g.q1, g.q2));
    if (fault == Fault::Bout) bout(Q1_2, 0) += 0.05;
    for (int k = 0; k < 5; ++k) {
      for (int n = 0; n < 7; ++n) {
        if (std::abs(bin(k, n) - g.bin[k][n]) > 1e-12 || std::abs(bout(k, n) - g.bout[k][n]) > 1e-12) {
          std::ostringstream os;
          os << "entry (" << k << "," << n << ") for marginals (" << g.q1 << "," << g.q2 << ") differs";
          return os.str();
        }
      }
    }
  }
  return "";
}

ReactiveTable table_for(Fault fault) {
  ReactiveTable t = default_reactive_table();
  // rcpt* = D1Only, rcpt = D2Only: Y should go to Q1_{2}.
  if (fault == Fault::Table1) t[2] = {MoveKind::ToQ2_1, Which::Y};
  return t;
}

std::string check_reactive_law(Fault fault, Rng& rng) {
  const ReactiveTable table = table_for(fault);
  for (int trial = 0; trial < 50; ++trial) {
    std::array<double, 4> v{};
    double s = 0;
    for (auto& x : v) s += (x = rng.u01() + 0.01);
    for (auto& x : v) x /= s;
    ReceptionVector p = ReceptionVector::from_array(v);
    for (auto star : {ReceptionStatus::D1Only, ReceptionStatus::D2Only, ReceptionStatus::Both}) {
      ReactiveMarginals m = reactive_marginals(table, star, p);
      if (std::abs(m.to_q1_2 - p.p_d1bar_d2()) > 1e-12 || std::abs(m.to_q2_1 - p.p_d1_d2bar()) > 1e-12 ||
          std::abs(m.leave - p.both) > 1e-12 || std::abs(m.keep - p.none) > 1e-12) {
        return "marginals for rcpt*=" + to_string(star) + " do not match the RC column";
      }
    }
  }
  return "";
}

std::string check_reactive_content() {
  using R = ReceptionStatus;
  // RC resends Y* when only d1 heard the premix, X* otherwise; whatever moves is the resent packet.
  for (auto star : {R::D1Only, R::D2Only, R::Both}) {
    for (auto r : {R::D1Only, R::D2Only}) {
      MoveOutcome m = reactive_move(star, r);
      Which sent = star == R::D1Only ? Which::Y : Which::X;
      if (star == R::Both) sent = r == R::D1Only ? Which::Y : Which::X;
      if (m.which != sent) return "rcpt*=" + to_string(star) + ", rcpt=" + to_string(r) + " moves the wrong packet";
    }
  }
  return "";
}

VrNetworkState loaded_state() {
  VrNetworkState s;
  for (std::uint32_t i = 1; i <= 2; ++i) {
    s.add_arrival({1, i});
    s.add_arrival({2, i});
  }
  std::uint32_t seq = 10;
  for (int i = 0; i < 2; ++i) {
    PacketId x{1, ++seq}, y{2, seq};
    s.q1_2.push_back(x);
    s.in_q1_2.insert(x.key());
    s.q2_1.push_back(y);
    s.in_q2_1.insert(y.key());
  }
  for (int i = 0; i < 3; ++i) {
    ReceptionStatus star = static_cast<ReceptionStatus>(1 + i);
    MixTuple m{star, {1, 20u + i}, {2, 20u + i}};
    s.q_mix.push_back(m);
    s.mix_x.insert(m.x.key());
  }
  return s;
}

std::string check_realized_columns(Fault fault) {
  const ReactiveTable table = table_for(fault);
  for (int o = 0; o < kNumOps; ++o) {
    Op op = static_cast<Op>(o);
    for (int r = 0; r < 4; ++r) {
      // Q_mix head cycles through every rcpt* via repeated runs.
      for (int head = 0; head < 3; ++head) {
        VrNetworkState s = loaded_state();
        for (int h = 0; h < head; ++h) {
          s.q_mix.push_back(s.q_mix.front());
          s.q_mix.pop_front();
        }
        auto before = s.lengths();
        MoveEvents ev;
        apply_outcome(op, static_cast<ReceptionStatus>(r), s, ev, table);
        auto after = s.lengths();
        VrColumn col = realized_column(op, static_cast<ReceptionStatus>(r));
        for (int k = 0; k < kNumVrQueues; ++k) {
          if (after[k] - before[k] != col.bout[k] - col.bin[k]) {
            return std::string("op ") + op_name(op) + " with rcpt " + to_string(static_cast<ReceptionStatus>(r)) +
                   " moves packets unlike its realized column";
          }
        }
      }
    }
  }
  return "";
}

std::string check_specs(Rng& rng) {
  for (int trial = 0; trial < 20; ++trial) {
    ChannelSpec ch;
    int S = 1 + static_cast<int>(rng.next() % 4);
    for (int c = 0; c < S; ++c) {
      ch.states.push_back({c + 1, 1.0 / S, vector_from_marginals(0.05 + 0.9 * rng.u01(), 0.05 + 0.9 * rng.u01())});
    }
    for (const SpnSpec& s : {build_7op_spec(ch), build_5op_spec(ch), build_routing_spec(ch)}) {
      s.validate();
      if (!s.acyclic()) return "vr-network spec is not acyclic";
      if (!s.service_entries_positive()) return "service entry on an input support is zero";
    }
  }
  return "";
}

std::string check_wire(Rng& rng) {
  for (int i = 0; i < 200; ++i) {
    Transmission tx;
    tx.op = static_cast<Op>(rng.next() % kNumOps);
    tx.kind = rng.bernoulli(0.5) ? Transmission::Kind::XorPair : Transmission::Kind::Uncoded;
    tx.first = {1, static_cast<std::uint32_t>(rng.next())};
    if (tx.kind == Transmission::Kind::XorPair) tx.second = {2, static_cast<std::uint32_t>(rng.next())};
    std::vector<std::uint8_t> body(8);
    for (auto& b : body) b = static_cast<std::uint8_t>(rng.next());
    auto [back, payload] = decode_wire(encode_wire(tx, body));
    if (!(back == tx) || payload != body) return "wire round trip changed the frame";
  }
  return "";
}

TrialConfig two_state_trial(SchemeId id, std::uint64_t seed) {
  TrialConfig cfg;
  cfg.channel.states = {{1, 0.5, {0, 0.5, 0.5, 0}}, {2, 0.5, {0, 0, 0, 1}}};
  cfg.scheme = {id, -1};
  cfg.R1 = cfg.R2 = 0.45;
  cfg.horizon = 5000;
  cfg.seed = seed;
  cfg.drain = true;
  return cfg;
}

std::string check_trials(std::uint64_t seed) {
  for (SchemeId id : {SchemeId::SevenOpDMW_q, SchemeId::SevenOpDMW_qinter, SchemeId::FiveOpDMW, SchemeId::RoutingBP}) {
    for (Fallback fb : {Fallback::Idle, Fallback::FirstFeasible}) {
      TrialConfig cfg = two_state_trial(id, seed);
      cfg.fallback = fb;
      TrialStats st = run_trial(cfg);
      if (!st.drain_complete) return cfg.scheme.name() + " did not drain completely";
      if (id != SchemeId::RoutingBP && st.bound_checks == 0) return "buffer bound never checked";
    }
  }
  return "";
}

std::string check_incremental_pruning(Rng& rng) {
  const std::uint64_t key = 99;
  VrNetworkState s;
  ReceiverBuffer inc1(Owner::D1, key), inc2(Owner::D2, key), full1(Owner::D1, key), full2(Owner::D2, key);
  MoveEvents ev;
  std::uint32_t seq1 = 0, seq2 = 0;
  for (int t = 0; t < 4000; ++t) {
    if (rng.bernoulli(0.45)) s.add_arrival({1, ++seq1});
    if (rng.bernoulli(0.45)) s.add_arrival({2, ++seq2});
    std::vector<Op> ok;
    for (int o = 0; o < kNumOps; ++o) {
      if (s.can_run(static_cast<Op>(o))) ok.push_back(static_cast<Op>(o));
    }
    if (ok.empty()) continue;
    Op op = ok[rng.next() % ok.size()];
    auto r = static_cast<ReceptionStatus>(rng.next() % 4);
    Transmission tx = encode(op, s);
    std::uint64_t w = payload_of(tx.first, key);
    if (tx.kind == Transmission::Kind::XorPair) w ^= payload_of(tx.second, key);
    for (ReceiverBuffer* b : {&inc1, &full1}) {
      if (d1_hears(r)) b->on_receive(tx, w);
    }
    for (ReceiverBuffer* b : {&inc2, &full2}) {
      if (d2_hears(r)) b->on_receive(tx, w);
    }
    apply_outcome(op, r, s, ev);
    inc1.note_source_events(ev);
    inc2.note_source_events(ev);
    ev.clear();
    if (t % 3 == 0) {
      inc1.prune_incremental(s);
      inc2.prune_incremental(s);
      SourceLists l = SourceLists::from(s);
      full1.prune(l);
      full2.prune(l);
      if (inc1.uncoded_count() != full1.uncoded_count() || inc1.sums_count() != full1.sums_count() ||
          inc2.uncoded_count() != full2.uncoded_count() || inc2.sums_count() != full2.sums_count()) {
        return "incremental pruning kept a different buffer at step " + std::to_string(t);
      }
    }
  }
  return "";
}

std::string check_capacity() {
  ChannelSpec ch;
  ch.states = {{1, 0.5, {0, 0.5, 0.5, 0}}, {2, 0.5, {0, 0, 0, 1}}};
  const std::pair<RegionScheme, double> want[] = {
      {RegionScheme::SevenOp, 1.0}, {RegionScheme::FiveOp, 0.875}, {RegionScheme::Routing, 0.75},
      {RegionScheme::BlockCode, 1.0}};
  for (auto [s, sum] : want) {
    double b = 2 * boundary(region_for(s, ch), {1, 1});
    if (std::abs(b - sum) > 1e-6) {
      std::ostringstream os;
      os << region_scheme_name(s) << " boundary sum " << b << ", expected " << sum;
      return os.str();
    }
  }
  return "";
}

std::string check_farkas_certificates(Rng& rng) {
  for (int trial = 0; trial < 30; ++trial) {
    // a x1 + a x2 = a together with b x1 + b x2 <= b (1 - eps) has no solution.
    LpProblem p;
    p.num_vars = 2;
    double a = 0.5 + rng.u01(), b = 0.5 + rng.u01();
    p.add_eq({a, a}, a);
    p.add_le({b, b}, b * (1 - 0.01 - 0.5 * rng.u01()));
    LpResult r = solve_feasibility(p);
    if (r.status != LpStatus::Infeasible) return "infeasible LP not detected";
    if (!check_farkas(p, r.y_eq, r.y_le)) return "Farkas certificate rejected";
  }
  return "";
}

std::string check_blockcode(Rng& rng) {
  for (int trial = 0; trial < 5; ++trial) {
    ChannelSpec ch;
    int S = 2 + static_cast<int>(rng.next() % 3);
    double tot = 0;
    for (int c = 0; c < S; ++c) {
      std::array<double, 4> v{};
      double s = 0;
      for (auto& x : v) s += (x = rng.u01());
      for (auto& x : v) x /= s;
      double f = 0.2 + rng.u01();
      tot += f;
      ch.states.push_back({c + 1, f, ReceptionVector::from_array(v)});
    }
    for (auto& st : ch.states) st.freq /= tot;
    double fsum = 0;
    for (auto& st : ch.states) fsum += st.freq;
    ch.states.back().freq += 1.0 - fsum;
    for (RatePoint d : {RatePoint{1, 1}, RatePoint{1, 0.3}, RatePoint{0.2, 1}}) {
      double a = boundary(region_for(RegionScheme::SevenOp, ch), d);
      double b = boundary(region_for(RegionScheme::BlockCode, ch), d);
      if (std::abs(a - b) > 1e-6) return "block-code and 7-op boundaries differ";
    }
  }
  return "";
}

}  // namespace

std::vector<CheckResult> run_verify(Fault fault, std::uint64_t seed) {
  Rng rng(derive_seed(seed, 77));
  const std::vector<std::pair<std::string, Check>> checks = {
      {"vnet.matrix_goldens", [&] { return check_matrices(fault); }},
      {"vnet.reactive_marginal_law", [&] { return check_reactive_law(fault, rng); }},
      {"vnet.reactive_content", [&] { return check_reactive_content(); }},
      {"vnet.realized_columns", [&] { return check_realized_columns(fault); }},
      {"vnet.wire_roundtrip", [&] { return check_wire(rng); }},
      {"spn.spec_structure", [&] { return check_specs(rng); }},
      {"spn.ledger_and_drain", [&] { return check_trials(seed); }},
      {"receiver.incremental_pruning", [&] { return check_incremental_pruning(rng); }},
      {"lp.farkas_certificates", [&] { return check_farkas_certificates(rng); }},
      {"capacity.two_state_goldens", [&] { return check_capacity(); }},
      {"capacity.blockcode_equivalence", [&] { return check_blockcode(rng); }},
  };
  std::vector<CheckResult> out;
  for (const auto& [name, fn] : checks) {
    CheckResult r{name, false, ""};
    try {
      r.detail = fn();
      r.pass = r.detail.empty();
    } catch (const std::exception& e) {
      r.detail = e.what();
    }
    out.push_back(r);
  }
  return out;
}

void print_report(std::ostream& os, const std::vector<CheckResult>& results) {
  os << "check,status,detail\n";
  for (const auto& r : results) {
    std::string d = r.detail;
    for (char& c : d) {
      if (c == ',' || c == '\n') c = ';';
    }
    os << r.name << "," << (r.pass ? "PASS" : "FAIL") << "," << d << "\n";
  }
}

bool all_passed(const std::vector<CheckResult>& results) {
  for (const auto& r : results) {
    if (!r.pass) return false;
  }
  return true;
}

}  // namespace opnc
