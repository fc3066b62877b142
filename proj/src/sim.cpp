#include "opnc/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "opnc/receiver.hpp"
#include "opnc/vnet.hpp"

namespace opnc {

SchemeRef SchemeRef::parse(const std::string& name) {
  if (name == "routing" || name == "routing_bp") return {SchemeId::RoutingBP, -1};
  if (name == "5op") return {SchemeId::FiveOpDMW, -1};
  if (name == "7op" || name == "7op_q") return {SchemeId::SevenOpDMW_q, -1};
  if (name == "7op_qinter") return {SchemeId::SevenOpDMW_qinter, -1};
  if (name == "7op_ra") return {SchemeId::SevenOpRA, -1};
  const std::string prefix = "5op_fixed";
  if (name.rfind(prefix, 0) == 0 && name.size() > prefix.size()) {
    std::string digits = name.substr(prefix.size());
    if (std::all_of(digits.begin(), digits.end(), [](char ch) { return ch >= '0' && ch <= '9'; }) &&
        digits.size() < 6) {
      int i = std::stoi(digits);
      if (i >= 1) return {SchemeId::FiveOpDMW, i - 1};
    }
  }
  throw std::invalid_argument("unknown scheme '" + name + "'");
}

std::string SchemeRef::name() const {
  switch (id) {
    case SchemeId::RoutingBP: return "routing";
    case SchemeId::FiveOpDMW: return fixed_combo >= 0 ? "5op_fixed" + std::to_string(fixed_combo + 1) : "5op";
    case SchemeId::SevenOpDMW_q: return "7op_q";
    case SchemeId::SevenOpDMW_qinter: return "7op_qinter";
    case SchemeId::SevenOpRA: return "7op_ra";
  }
  return "?";
}

double effective_stride(const TrialConfig& cfg) {
  if (cfg.sampling_stride > 0) return cfg.sampling_stride;
  return std::max(1.0, std::min(100.0, std::floor(cfg.horizon / 10.0)));
}

namespace {

void validate_common(const TrialConfig& cfg) {
  if (!(cfg.horizon > 0)) throw std::invalid_argument("horizon must be positive");
  if (!(cfg.R1 >= 0) || !(cfg.R2 >= 0)) throw std::invalid_argument("rates must be nonnegative");
  if (cfg.pruning_period < 1) throw std::invalid_argument("pruning_period must be >= 1");
  if (cfg.sampling_stride < 0) throw std::invalid_argument("sampling_stride must be >= 0");
  if (!cfg.rate_adaptation()) {
    if (cfg.scheme.id == SchemeId::SevenOpRA) throw std::invalid_argument("7op_ra needs rate-adaptation combos");
    if (cfg.scheme.fixed_combo >= 0) throw std::invalid_argument("fixed-combo schemes need rate-adaptation combos");
    cfg.channel.validate();
    switch (cfg.arrivals) {
      case ArrivalKind::Bernoulli:
        if (cfg.R1 > 1 || cfg.R2 > 1) throw std::invalid_argument("Bernoulli arrivals need rates <= 1");
        break;
      case ArrivalKind::BatchUniform:
        if (cfg.batch_max < 1) throw std::invalid_argument("batch_max must be >= 1");
        if (cfg.R1 > (cfg.batch_max + 1) / 2.0 || cfg.R2 > (cfg.batch_max + 1) / 2.0)
          throw std::invalid_argument("batch-uniform rate exceeds the mean batch size");
        break;
      case ArrivalKind::Poisson: break;
    }
  } else {
    if (cfg.scheme.id == SchemeId::SevenOpDMW_q || cfg.scheme.id == SchemeId::SevenOpDMW_qinter)
      throw std::invalid_argument("rate-adaptation mode uses 7op_ra, not " + cfg.scheme.name());
    for (const auto& cb : cfg.combos) {
      if (!(cb.T > 0)) throw std::invalid_argument("combo durations must be positive");
      cb.p.validate();
    }
    if (cfg.scheme.fixed_combo >= static_cast<int>(cfg.combos.size()))
      throw std::invalid_argument("fixed combo index out of range");
  }
}

int draw_arrivals(ArrivalKind kind, double R, int batch_max, double dur, Rng& rng) {
  switch (kind) {
    case ArrivalKind::Bernoulli: return rng.bernoulli(R) ? 1 : 0;
    case ArrivalKind::BatchUniform: {
      bool hit = rng.bernoulli(R / ((batch_max + 1) / 2.0));
      std::uint64_t u = rng.next();
      return hit ? 1 + static_cast<int>(u % static_cast<std::uint64_t>(batch_max)) : 0;
    }
    case ArrivalKind::Poisson: return rng.poisson(R * dur);
  }
  return 0;
}

std::vector<std::uint8_t> payload_bytes(std::uint64_t w) {
  std::vector<std::uint8_t> b(8);
  for (int i = 0; i < 8; ++i) b[i] = static_cast<std::uint8_t>(w >> (56 - 8 * i));
  return b;
}

std::uint64_t payload_word(const std::vector<std::uint8_t>& b) {
  if (b.size() != 8) throw ProtocolViolation("decoding error: payload length " + std::to_string(b.size()));
  std::uint64_t w = 0;
  for (std::uint8_t x : b) w = (w << 8) | x;
  return w;
}

// Source vr-network plus both receivers.
struct Plant {
  const VrLayout* layout = nullptr;
  VrNetworkState vr;
  ReceiverBuffer d1;
  ReceiverBuffer d2;
  MoveEvents ev;
  std::uint64_t run_key = 0;
  std::uint32_t seq1 = 0;
  std::uint32_t seq2 = 0;
  std::int64_t transmissions = 0;

  Plant(const VrLayout* l, std::uint64_t key) : layout(l), d1(Owner::D1, key), d2(Owner::D2, key), run_key(key) {}

  void arrive(int a1, int a2) {
    for (int i = 0; i < a1; ++i) vr.add_arrival({1, ++seq1});
    for (int i = 0; i < a2; ++i) vr.add_arrival({2, ++seq2});
  }

  void execute(Op op, ReceptionStatus r) {
    Transmission tx = encode(op, vr);
    std::uint64_t w = payload_of(tx.first, run_key);
    if (tx.kind == Transmission::Kind::XorPair) w ^= payload_of(tx.second, run_key);
    auto [rx, body] = decode_wire(encode_wire(tx, payload_bytes(w)));
    if (!(rx == tx)) throw ProtocolViolation("decoding error: wire header mismatch");
    std::uint64_t got = payload_word(body);
    if (d1_hears(r)) d1.on_receive(rx, got);
    if (d2_hears(r)) d2.on_receive(rx, got);
    apply_outcome(op, r, vr, ev);
    d1.note_source_events(ev);
    d2.note_source_events(ev);
    ev.clear();
    ++transmissions;
  }

  void prune() {
    d1.prune_incremental(vr);
    d2.prune_incremental(vr);
  }

  std::int64_t backlog() const {
    auto L = vr.lengths();
    std::int64_t s = 0;
    for (auto x : L) s += x;
    return s;
  }

  void actual_queues(std::vector<std::int64_t>& Q) const {
    auto L = vr.lengths();
    Q.assign(layout->K, 0);
    for (int vq = 0; vq < kNumVrQueues; ++vq) {
      if (layout->queue_index[vq] >= 0) Q[layout->queue_index[vq]] = L[vq];
    }
  }
};

std::string dump_state(const TrialConfig& cfg, double t, const Plant& p, const SchedulerState* s) {
  std::ostringstream os;
  os << " [scheme=" << cfg.scheme.name() << " seed=" << cfg.seed << " t=" << t << " vr=";
  auto L = p.vr.lengths();
  for (int i = 0; i < kNumVrQueues; ++i) os << (i ? "," : "") << L[i];
  os << " delivered=" << p.d1.delivered_count() << "," << p.d2.delivered_count() << " arrivals=" << p.seq1 << ","
     << p.seq2 << " buf=" << p.d1.size() << "," << p.d2.size();
  if (s) {
    os << " Q=";
    for (std::size_t k = 0; k < s->Q.size(); ++k) os << (k ? "," : "") << s->Q[k];
    os << " q=";
    for (std::size_t k = 0; k < s->q.size(); ++k) os << (k ? "," : "") << s->q[k];
  }
  os << "]";
  return os.str();
}

void check_plant(const TrialConfig& cfg, double t, const Plant& p, const SchedulerState* s, bool check_bound,
                 TrialStats& st) {
  auto L = p.vr.lengths();
  if (s) {
    for (int vq = 0; vq < kNumVrQueues; ++vq) {
      int k = p.layout->queue_index[vq];
      std::int64_t want = k >= 0 ? s->Q[k] : 0;
      if (L[vq] != want) throw InvariantViolation("vr-queue length differs from scheduler Q" + dump_state(cfg, t, p, s));
    }
  }
  auto del1 = static_cast<std::int64_t>(p.d1.delivered_count());
  auto del2 = static_cast<std::int64_t>(p.d2.delivered_count());
  if (static_cast<std::int64_t>(p.seq1) != del1 + L[Q1E] + L[QMIX] + L[Q1_2] ||
      static_cast<std::int64_t>(p.seq2) != del2 + L[Q2E] + L[QMIX] + L[Q2_1]) {
    throw InvariantViolation("conservation violated" + dump_state(cfg, t, p, s));
  }
  if (check_bound) {
    ++st.bound_checks;
    if (!check_lemma1(p.d1, L[Q1_2], L[Q2_1], L[QMIX]) || !check_lemma1(p.d2, L[Q1_2], L[Q2_1], L[QMIX]))
      throw InvariantViolation("receiver buffer exceeds the vr-queue length bound" + dump_state(cfg, t, p, s));
  }
  st.max_buf_d1 = std::max<std::int64_t>(st.max_buf_d1, static_cast<std::int64_t>(p.d1.size()));
  st.max_buf_d2 = std::max<std::int64_t>(st.max_buf_d2, static_cast<std::int64_t>(p.d2.size()));
}

Sample make_sample(double t, const Plant& p) {
  Sample sm;
  sm.t = t;
  auto L = p.vr.lengths();
  sm.queues.assign(L.begin(), L.end());
  for (auto x : L) sm.backlog += x;
  sm.delivered1 = static_cast<std::int64_t>(p.d1.delivered_count());
  sm.delivered2 = static_cast<std::int64_t>(p.d2.delivered_count());
  sm.buf_d1 = static_cast<std::int64_t>(p.d1.size());
  sm.buf_d2 = static_cast<std::int64_t>(p.d2.size());
  return sm;
}

LedgerSample make_ledger(std::int64_t t, const SchedulerState& s) {
  return {t, s.q, s.q_inter, s.Q_inter, s.Q, s.N_NA, s.D};
}

void finish(TrialStats& st, const Plant& p) {
  st.arrivals1 = p.seq1;
  st.arrivals2 = p.seq2;
  st.delivered1 = static_cast<std::int64_t>(p.d1.delivered_count());
  st.delivered2 = static_cast<std::int64_t>(p.d2.delivered_count());
  st.final_backlog = p.backlog();
  st.transmissions = p.transmissions;
}

void poll_cancel(const TrialConfig& cfg, std::int64_t i) {
  if ((i & 1023) == 0 && cfg.cancel && cfg.cancel->load(std::memory_order_relaxed)) throw Cancelled();
}

std::vector<ReceptionVector> channel_vectors(const ChannelSpec& ch) {
  std::vector<ReceptionVector> v;
  for (const auto& s : ch.states) v.push_back(s.p);
  return v;
}

// Best feasible SA by backpressure on the given queue lengths, else the first feasible one.
int drain_pick(const SpnSpec& spec, const VrLayout& layout, const VrNetworkState& vr, const std::vector<double>& Q,
               int c, double* value) {
  int best = -1, first = -1;
  double best_val = 0.0;
  for (int n = 0; n < spec.N; ++n) {
    if (!vr.can_run(layout.ops[n])) continue;
    if (first < 0) first = n;
    double d = 0.0;
    for (int k = 0; k < spec.K; ++k) d += Q[k] * (spec.bin_bar[c](k, n) - spec.bout_bar[c](k, n));
    if (d > best_val) {
      best_val = d;
      best = n;
    }
  }
  if (value) *value = best >= 0 ? best_val : 0.0;
  return best >= 0 ? best : first;
}

std::int64_t drain_limit(std::int64_t backlog) { return 1000 + 200 * backlog; }

}  // namespace

RegionLp scheme_region(const TrialConfig& cfg) {
  if (cfg.rate_adaptation()) {
    switch (cfg.scheme.id) {
      case SchemeId::RoutingBP: return rate_adaptation_region(cfg.combos, RaScheme::Routing);
      case SchemeId::FiveOpDMW:
        if (cfg.scheme.fixed_combo >= 0)
          return rate_adaptation_region(cfg.combos, RaScheme::FiveOpFixed, cfg.scheme.fixed_combo);
        return rate_adaptation_region(cfg.combos, RaScheme::FiveOpAll);
      default: return rate_adaptation_region(cfg.combos, RaScheme::SevenOp);
    }
  }
  switch (cfg.scheme.id) {
    case SchemeId::RoutingBP: return region_for(RegionScheme::Routing, cfg.channel);
    case SchemeId::FiveOpDMW: return region_for(RegionScheme::FiveOp, cfg.channel);
    default: return region_for(RegionScheme::SevenOp, cfg.channel);
  }
}

TrialStats run_trial(const TrialConfig& cfg) {
  if (cfg.rate_adaptation()) return run_rate_adaptation(cfg);
  if (cfg.scheme.id == SchemeId::RoutingBP) return run_routing_bp(cfg);
  return run_slotted(cfg);
}

TrialStats run_slotted(const TrialConfig& cfg) {
  validate_common(cfg);
  if (cfg.rate_adaptation()) throw std::invalid_argument("run_slotted called with rate-adaptation combos");
  if (cfg.scheme.id == SchemeId::RoutingBP) return run_routing_bp(cfg);

  const bool seven = cfg.scheme.id != SchemeId::FiveOpDMW;
  const VrLayout& layout = seven ? layout_7op() : layout_5op();
  const SpnSpec spec = seven ? build_7op_spec(cfg.channel) : build_5op_spec(cfg.channel);
  const BpMode mode = cfg.scheme.id == SchemeId::SevenOpDMW_qinter ? BpMode::Inter : BpMode::Virtual;
  const auto ps = channel_vectors(cfg.channel);

  Rng ch_rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(Substream::Channel)));
  Rng arr_rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(Substream::Arrivals)));
  Rng rx_rng(derive_seed(cfg.reception_seed.value_or(cfg.seed), static_cast<std::uint64_t>(Substream::Reception)));
  const std::uint64_t run_key = derive_seed(cfg.seed, static_cast<std::uint64_t>(Substream::Payload));

  Scheduler sch(spec, mode, cfg.fallback);
  sch.check_invariants = cfg.check_invariants;
  SchedulerState s(spec.K);
  Plant plant(&layout, run_key);
  TrialStats st;

  const auto H = static_cast<std::int64_t>(std::llround(cfg.horizon));
  const auto stride = static_cast<std::int64_t>(std::llround(effective_stride(cfg)));
  const bool check_bound = cfg.pruning_period == 1;
  std::vector<int> a(2, 0);
  ServiceRealization pref, exec;
  std::uint64_t hash = 0xcbf29ce484222325ull;

  for (std::int64_t t = 0; t < H; ++t) {
    poll_cancel(cfg, t);
    int c = sample_state_index(cfg.channel, t, ch_rng);
    hash = (hash ^ static_cast<std::uint64_t>(c + 1)) * 0x100000001b3ull;
    a[0] = draw_arrivals(cfg.arrivals, cfg.R1, cfg.batch_max, 1.0, arr_rng);
    a[1] = draw_arrivals(cfg.arrivals, cfg.R2, cfg.batch_max, 1.0, arr_rng);
    ReceptionStatus r = sample_reception(ps[c], rx_rng);

    Decision dec = sch.decide(s, c);
    realize_into(layout, dec.preferred, r, pref);
    const ServiceRealization* ex = &pref;
    if (dec.executed >= 0 && dec.executed != dec.preferred) {
      realize_into(layout, dec.executed, r, exec);
      ex = &exec;
    }
    try {
      sch.commit(s, c, a, dec, pref, *ex);
    } catch (const InvariantViolation& e) {
      throw InvariantViolation(e.what() + dump_state(cfg, static_cast<double>(t + 1), plant, &s));
    }
    if (!dec.feasible) ++st.infeasible_idles;
    if (dec.executed >= 0) plant.execute(layout.ops[dec.executed], r);
    plant.arrive(a[0], a[1]);
    if ((t + 1) % cfg.pruning_period == 0) plant.prune();
    if (cfg.check_invariants) check_plant(cfg, static_cast<double>(t + 1), plant, &s, check_bound, st);
    for (double D : s.D) st.max_deficit = std::max(st.max_deficit, D);
    ++st.steps;
    if ((t + 1) % stride == 0) {
      st.samples.push_back(make_sample(static_cast<double>(t + 1), plant));
      if (cfg.record_ledgers) st.ledgers.push_back(make_ledger(t + 1, s));
    }
  }
  st.elapsed = static_cast<double>(H);
  st.backlog_at_horizon = plant.backlog();
  st.null_activities = sch.null_activities();
  st.channel_trace_hash = hash;

  if (cfg.drain) {
    st.drained = true;
    const std::int64_t limit = drain_limit(plant.backlog());
    std::vector<std::int64_t> Qi;
    std::vector<double> Qd(spec.K);
    std::int64_t t = H;
    while (plant.backlog() > 0 && st.drain_steps < limit) {
      poll_cancel(cfg, st.drain_steps);
      int c = sample_state_index(cfg.channel, t, ch_rng);
      ReceptionStatus r = sample_reception(ps[c], rx_rng);
      plant.actual_queues(Qi);
      for (int k = 0; k < spec.K; ++k) Qd[k] = static_cast<double>(Qi[k]);
      int n = drain_pick(spec, layout, plant.vr, Qd, c, nullptr);
      if (n >= 0) plant.execute(layout.ops[n], r);
      ++t;
      ++st.drain_steps;
      if (st.drain_steps % cfg.pruning_period == 0) plant.prune();
      if (cfg.check_invariants) check_plant(cfg, static_cast<double>(t), plant, nullptr, check_bound, st);
    }
    plant.prune();
    if (cfg.check_invariants) check_plant(cfg, static_cast<double>(t), plant, nullptr, true, st);
  }
  finish(st, plant);
  if (st.drained) {
    st.drain_complete = st.final_backlog == 0 && st.delivered1 == st.arrivals1 && st.delivered2 == st.arrivals2 &&
                        plant.d1.size() == 0 && plant.d2.size() == 0;
  }
  return st;
}

TrialStats run_routing_bp(const TrialConfig& cfg) {
  validate_common(cfg);
  const bool ra = cfg.rate_adaptation();
  Rng ch_rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(Substream::Channel)));
  Rng arr_rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(Substream::Arrivals)));
  Rng rx_rng(derive_seed(cfg.reception_seed.value_or(cfg.seed), static_cast<std::uint64_t>(Substream::Reception)));
  const std::uint64_t run_key = derive_seed(cfg.seed, static_cast<std::uint64_t>(Substream::Payload));

  std::vector<ReceptionVector> ps;
  std::vector<double> T;
  if (ra) {
    for (const auto& cb : cfg.combos) {
      ps.push_back(cb.p);
      T.push_back(cb.T);
    }
  } else {
    ps = channel_vectors(cfg.channel);
  }
  const double Tmin = ra ? *std::min_element(T.begin(), T.end()) : 1.0;

  Plant plant(&layout_5op(), run_key);
  TrialStats st;
  const double stride = effective_stride(cfg);
  double next_sample = stride;
  double clock = 0.0;
  std::uint64_t hash = 0xcbf29ce484222325ull;
  const ArrivalKind kind = ra ? ArrivalKind::Poisson : cfg.arrivals;

  // One decision; returns the duration used.
  auto serve = [&](int c_fixed) -> double {
    int c = 0, k = -1;
    double best = 0.0;
    const double Q1 = static_cast<double>(plant.vr.q1_empty.size());
    const double Q2 = static_cast<double>(plant.vr.q2_empty.size());
    auto consider = [&](int ci, double scale) {
      double v1 = Q1 * ps[ci].p_d1() * scale, v2 = Q2 * ps[ci].p_d2() * scale;
      if (v1 > best) { best = v1; c = ci; k = 0; }
      if (v2 > best) { best = v2; c = ci; k = 1; }
    };
    if (ra) {
      for (int i = 0; i < static_cast<int>(ps.size()); ++i) consider(i, 1.0 / T[i]);
    } else {
      c = c_fixed;
      consider(c_fixed, 1.0);
    }
    ReceptionStatus r = sample_reception(ps[c], rx_rng);
    if (k == 0 && d1_hears(r)) {
      PacketId id = plant.vr.q1_empty.front();
      plant.vr.q1_empty.pop_front();
      plant.d1.deliver(id, payload_of(id, run_key));
    } else if (k == 1 && d2_hears(r)) {
      PacketId id = plant.vr.q2_empty.front();
      plant.vr.q2_empty.pop_front();
      plant.d2.deliver(id, payload_of(id, run_key));
    }
    if (k >= 0) ++plant.transmissions;
    return ra ? (k >= 0 ? T[c] : Tmin) : 1.0;
  };

  std::int64_t i = 0;
  while (clock < cfg.horizon) {
    poll_cancel(cfg, i);
    int c = 0;
    if (!ra) {
      c = sample_state_index(cfg.channel, i, ch_rng);
      hash = (hash ^ static_cast<std::uint64_t>(c + 1)) * 0x100000001b3ull;
    }
    // Arrivals over the step are drawn after the duration is known.
    double dur = 0.0;
    int a1 = 0, a2 = 0;
    if (!ra) {
      a1 = draw_arrivals(kind, cfg.R1, cfg.batch_max, 1.0, arr_rng);
      a2 = draw_arrivals(kind, cfg.R2, cfg.batch_max, 1.0, arr_rng);
      dur = serve(c);
    } else {
      dur = serve(0);
      a1 = draw_arrivals(kind, cfg.R1, cfg.batch_max, dur, arr_rng);
      a2 = draw_arrivals(kind, cfg.R2, cfg.batch_max, dur, arr_rng);
    }
    plant.arrive(a1, a2);
    clock += dur;
    ++i;
    ++st.steps;
    if (cfg.check_invariants) check_plant(cfg, clock, plant, nullptr, false, st);
    while (next_sample <= clock + 1e-9 && next_sample <= cfg.horizon + 1e-9) {
      st.samples.push_back(make_sample(next_sample, plant));
      next_sample += stride;
    }
  }
  st.elapsed = clock;
  st.backlog_at_horizon = plant.backlog();
  st.channel_trace_hash = ra ? 0 : hash;

  if (cfg.drain) {
    st.drained = true;
    const std::int64_t limit = drain_limit(plant.backlog());
    while (plant.backlog() > 0 && st.drain_steps < limit) {
      poll_cancel(cfg, st.drain_steps);
      int c = ra ? 0 : sample_state_index(cfg.channel, i, ch_rng);
      serve(c);
      ++i;
      ++st.drain_steps;
    }
    if (cfg.check_invariants) check_plant(cfg, clock, plant, nullptr, false, st);
  }
  finish(st, plant);
  if (st.drained) {
    st.drain_complete = st.final_backlog == 0 && st.delivered1 == st.arrivals1 && st.delivered2 == st.arrivals2;
  }
  return st;
}

TrialStats run_rate_adaptation(const TrialConfig& cfg) {
  validate_common(cfg);
  if (!cfg.rate_adaptation()) throw std::invalid_argument("run_rate_adaptation needs combos");
  if (cfg.scheme.id == SchemeId::RoutingBP) return run_routing_bp(cfg);

  std::vector<Combo> used;
  if (cfg.scheme.fixed_combo >= 0) used.push_back(cfg.combos[cfg.scheme.fixed_combo]);
  else used = cfg.combos;
  std::vector<ReceptionVector> ps;
  std::vector<double> T, scale;
  for (const auto& cb : used) {
    ps.push_back(cb.p);
    T.push_back(cb.T);
    scale.push_back(1.0 / cb.T);
  }
  const double Tmin = *std::min_element(T.begin(), T.end());
  const std::vector<double> w(ps.size(), 1.0);
  const bool seven = cfg.scheme.id == SchemeId::SevenOpRA;
  const VrLayout& layout = seven ? layout_7op() : layout_5op();
  const SpnSpec spec = seven ? build_7op_spec(ps, w) : build_5op_spec(ps, w);

  Rng arr_rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(Substream::Arrivals)));
  Rng rx_rng(derive_seed(cfg.reception_seed.value_or(cfg.seed), static_cast<std::uint64_t>(Substream::Reception)));
  const std::uint64_t run_key = derive_seed(cfg.seed, static_cast<std::uint64_t>(Substream::Payload));

  Scheduler sch(spec, BpMode::Virtual, cfg.fallback);
  sch.check_invariants = cfg.check_invariants;
  SchedulerState s(spec.K);
  Plant plant(&layout, run_key);
  TrialStats st;

  const double stride = effective_stride(cfg);
  double next_sample = stride;
  double clock = 0.0;
  const bool check_bound = cfg.pruning_period == 1;
  std::vector<int> a(2, 0);
  ServiceRealization pref, exec;
  std::int64_t i = 0;

  while (clock < cfg.horizon) {
    poll_cancel(cfg, i);
    Decision dec = sch.decide_scaled(s, scale);
    const int c = dec.state;
    const double dur = dec.executed >= 0 ? T[c] : Tmin;
    a[0] = draw_arrivals(ArrivalKind::Poisson, cfg.R1, cfg.batch_max, dur, arr_rng);
    a[1] = draw_arrivals(ArrivalKind::Poisson, cfg.R2, cfg.batch_max, dur, arr_rng);
    ReceptionStatus r = sample_reception(ps[c], rx_rng);
    realize_into(layout, dec.preferred, r, pref);
    const ServiceRealization* ex = &pref;
    if (dec.executed >= 0 && dec.executed != dec.preferred) {
      realize_into(layout, dec.executed, r, exec);
      ex = &exec;
    }
    try {
      sch.commit(s, c, a, dec, pref, *ex);
    } catch (const InvariantViolation& e) {
      throw InvariantViolation(e.what() + dump_state(cfg, clock, plant, &s));
    }
    if (!dec.feasible) ++st.infeasible_idles;
    if (dec.executed >= 0) plant.execute(layout.ops[dec.executed], r);
    plant.arrive(a[0], a[1]);
    clock += dur;
    ++i;
    ++st.steps;
    if (i % cfg.pruning_period == 0) plant.prune();
    if (cfg.check_invariants) check_plant(cfg, clock, plant, &s, check_bound, st);
    for (double D : s.D) st.max_deficit = std::max(st.max_deficit, D);
    while (next_sample <= clock + 1e-9 && next_sample <= cfg.horizon + 1e-9) {
      st.samples.push_back(make_sample(next_sample, plant));
      if (cfg.record_ledgers) st.ledgers.push_back(make_ledger(i, s));
      next_sample += stride;
    }
  }
  st.elapsed = clock;
  st.backlog_at_horizon = plant.backlog();
  st.null_activities = sch.null_activities();

  if (cfg.drain) {
    st.drained = true;
    const std::int64_t limit = drain_limit(plant.backlog());
    std::vector<std::int64_t> Qi;
    std::vector<double> Qd(spec.K);
    while (plant.backlog() > 0 && st.drain_steps < limit) {
      poll_cancel(cfg, st.drain_steps);
      plant.actual_queues(Qi);
      for (int k = 0; k < spec.K; ++k) Qd[k] = static_cast<double>(Qi[k]);
      int best_c = 0, best_n = -1;
      double best_val = 0.0;
      for (int c = 0; c < spec.num_states(); ++c) {
        double v = 0.0;
        int n = drain_pick(spec, layout, plant.vr, Qd, c, &v);
        if (best_n < 0 || v * scale[c] > best_val) {
          best_val = v * scale[c];
          best_c = c;
          best_n = n;
        }
      }
      ReceptionStatus r = sample_reception(ps[best_c], rx_rng);
      if (best_n >= 0) plant.execute(layout.ops[best_n], r);
      ++st.drain_steps;
      if (st.drain_steps % cfg.pruning_period == 0) plant.prune();
      if (cfg.check_invariants) check_plant(cfg, clock, plant, nullptr, check_bound, st);
    }
    plant.prune();
    if (cfg.check_invariants) check_plant(cfg, clock, plant, nullptr, true, st);
  }
  finish(st, plant);
  if (st.drained) {
    st.drain_complete = st.final_backlog == 0 && st.delivered1 == st.arrivals1 && st.delivered2 == st.arrivals2 &&
                        plant.d1.size() == 0 && plant.d2.size() == 0;
  }
  return st;
}

SpnSpec counterexample_spec() {
  SpnSpec s;
  s.K = 3;
  s.M = 1;
  s.N = 2;
  s.A = Mat(3, 1);
  s.A(0, 0) = 1;
  Mat bi(3, 2), bo(3, 2);
  bi(0, 0) = 1;
  bi(1, 1) = 1;
  bi(2, 1) = 1;
  bo(1, 0) = 0.5;
  bo(2, 0) = 0.5;
  s.bin_bar = {bi};
  s.bout_bar = {bo};
  s.state_weight = {1.0};
  s.s_in = {{0}, {1, 2}};
  s.s_out = {{1, 2}, {}};
  s.activation_set = unit_activation_set(2);
  s.joint.assign(1, std::vector<std::vector<JointOutcome>>(2));
  s.joint[0][0] = {{0.5, {1, 0, 0}, {0, 1, 0}}, {0.5, {1, 0, 0}, {0, 0, 1}}};
  s.joint[0][1] = {{1.0, {0, 1, 1}, {0, 0, 0}}};
  s.queue_names = {"Q1", "Q2", "Q3"};
  s.sa_names = {"SA1", "SA2"};
  s.validate();
  return s;
}

CounterexampleRun run_counterexample(CounterexamplePolicy policy, const std::vector<std::int64_t>& checkpoints,
                                     std::uint64_t seed) {
  const SpnSpec spec = counterexample_spec();
  Rng rng(derive_seed(seed, static_cast<std::uint64_t>(Substream::Service)));
  Scheduler sch(spec, BpMode::Virtual, Fallback::Idle);
  sch.check_invariants = false;
  SchedulerState s(3);
  const std::vector<int> a{1};
  CounterexampleRun out;
  std::int64_t sa1 = 0;
  std::size_t next = 0;
  const std::int64_t H = checkpoints.empty() ? 0 : checkpoints.back();
  for (std::int64_t t = 1; t <= H; ++t) {
    if (policy == CounterexamplePolicy::Greedy) {
      int n = -1;
      if (s.Q[1] >= 1 && s.Q[2] >= 1) n = 1;
      else if (s.Q[0] >= 1) n = 0;
      if (n >= 0) {
        ServiceRealization r = draw_realization(spec, 0, n, rng);
        for (int k = 0; k < 3; ++k) s.Q[k] += static_cast<std::int64_t>(r.bout[k]) - r.bin[k];
        if (n == 0) ++sa1;
      }
      s.Q[0] += 1;
    } else {
      Decision dec = sch.decide(s, 0);
      ServiceRealization pref = draw_realization(spec, 0, dec.preferred, rng);
      sch.commit(s, 0, a, dec, pref, pref);
      if (dec.executed == 0) ++sa1;
    }
    while (next < checkpoints.size() && checkpoints[next] == t) {
      out.gap.push_back(std::llabs(s.Q[1] - s.Q[2]));
      out.sa1_count.push_back(sa1);
      ++next;
    }
  }
  return out;
}

double random_walk_abs_mean(std::int64_t n) {
  if (n <= 0) return 0.0;
  const double ln2 = std::log(2.0);
  const double lgn = std::lgamma(static_cast<double>(n) + 1.0);
  double sum = 0.0;
  for (std::int64_t k = 0; k <= n; ++k) {
    double lp = lgn - std::lgamma(static_cast<double>(k) + 1.0) - std::lgamma(static_cast<double>(n - k) + 1.0) -
                static_cast<double>(n) * ln2;
    sum += std::exp(lp) * static_cast<double>(std::llabs(2 * k - n));
  }
  return sum;
}

}  // namespace opnc
