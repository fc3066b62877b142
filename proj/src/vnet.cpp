#include "opnc/vnet.hpp"

#include <stdexcept>

namespace opnc {

const char* op_name(Op op) {
  static const char* names[] = {"NC1", "NC2", "DX1", "DX2", "PM", "RC", "CX"};
  return names[static_cast<int>(op)];
}

std::uint64_t payload_of(PacketId id, std::uint64_t run_key) {
  return splitmix64(run_key ^ splitmix64(id.key()));
}

namespace {

void put_entry(std::vector<std::uint8_t>& out, PacketId id) {
  out.push_back(id.session);
  for (int shift = 24; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(id.seq >> shift));
}

PacketId get_entry(const std::vector<std::uint8_t>& in, std::size_t pos) {
  PacketId id;
  id.session = in[pos];
  for (int i = 1; i <= 4; ++i) id.seq = (id.seq << 8) | in[pos + i];
  return id;
}

}  // namespace

std::vector<std::uint8_t> encode_wire(const Transmission& tx, const std::vector<std::uint8_t>& payload) {
  std::vector<std::uint8_t> out;
  out.reserve(11 + payload.size());
  out.push_back(static_cast<std::uint8_t>((static_cast<int>(tx.kind) << 4) | static_cast<int>(tx.op)));
  put_entry(out, tx.first);
  if (tx.kind == Transmission::Kind::XorPair) put_entry(out, tx.second);
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

std::pair<Transmission, std::vector<std::uint8_t>> decode_wire(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 6) throw std::invalid_argument("wire frame too short");
  Transmission tx;
  int kind = bytes[0] >> 4;
  int op = bytes[0] & 0x0f;
  if (kind > 1 || op >= kNumOps) throw std::invalid_argument("bad wire tag");
  tx.kind = static_cast<Transmission::Kind>(kind);
  tx.op = static_cast<Op>(op);
  tx.first = get_entry(bytes, 1);
  std::size_t pos = 6;
  if (tx.kind == Transmission::Kind::XorPair) {
    if (bytes.size() < 11) throw std::invalid_argument("wire frame too short");
    tx.second = get_entry(bytes, 6);
    pos = 11;
  }
  return {tx, std::vector<std::uint8_t>(bytes.begin() + static_cast<std::ptrdiff_t>(pos), bytes.end())};
}

const ReactiveTable& default_reactive_table() {
  using K = MoveKind;
  using W = Which;
  static const ReactiveTable table = {{
      // rcpt* = D1Only; RC sent Y*
      {K::Keep, W::None}, {K::ToQ2_1, W::Y}, {K::ToQ1_2, W::Y}, {K::Leave, W::None},
      // rcpt* = D2Only; RC sent X*
      {K::Keep, W::None}, {K::ToQ2_1, W::X}, {K::ToQ1_2, W::X}, {K::Leave, W::None},
      // rcpt* = Both; RC sent X*
      {K::Keep, W::None}, {K::ToQ2_1, W::Y}, {K::ToQ1_2, W::X}, {K::Leave, W::None},
  }};
  return table;
}

MoveOutcome reactive_move(const ReactiveTable& table, ReceptionStatus rcpt_star, ReceptionStatus rcpt_t) {
  if (rcpt_star == ReceptionStatus::None) throw std::invalid_argument("reactive move needs rcpt* != None");
  return table[(static_cast<int>(rcpt_star) - 1) * 4 + static_cast<int>(rcpt_t)];
}

MoveOutcome reactive_move(ReceptionStatus rcpt_star, ReceptionStatus rcpt_t) {
  return reactive_move(default_reactive_table(), rcpt_star, rcpt_t);
}

ReactiveMarginals reactive_marginals(const ReactiveTable& table, ReceptionStatus rcpt_star, const ReceptionVector& p) {
  ReactiveMarginals m;
  for (int t = 0; t < 4; ++t) {
    auto r = static_cast<ReceptionStatus>(t);
    switch (reactive_move(table, rcpt_star, r).kind) {
      case MoveKind::Keep: m.keep += p.prob(r); break;
      case MoveKind::Leave: m.leave += p.prob(r); break;
      case MoveKind::ToQ1_2: m.to_q1_2 += p.prob(r); break;
      case MoveKind::ToQ2_1: m.to_q2_1 += p.prob(r); break;
    }
  }
  return m;
}

std::pair<Mat, Mat> build_matrices(const ReceptionVector& p) {
  p.validate();
  const int nc1 = 0, nc2 = 1, dx1 = 2, dx2 = 3, pm = 4, rc = 5, cx = 6;
  Mat bin(kNumVrQueues, kNumOps), bout(kNumVrQueues, kNumOps);
  bin(Q1E, nc1) = bin(Q1E, pm) = p.p_any();
  bin(Q2E, nc2) = bin(Q2E, pm) = p.p_any();
  bin(Q1_2, dx1) = bin(Q1_2, cx) = p.p_d1();
  bin(Q2_1, dx2) = bin(Q2_1, cx) = p.p_d2();
  bin(QMIX, rc) = p.p_any();
  bout(Q1_2, nc1) = bout(Q1_2, rc) = p.p_d1bar_d2();
  bout(Q2_1, nc2) = bout(Q2_1, rc) = p.p_d1_d2bar();
  bout(QMIX, pm) = p.p_any();
  return {bin, bout};
}

namespace {

const char* kVrQueueNames[kNumVrQueues] = {"Q1_empty", "Q2_empty", "Q1_{2}", "Q2_{1}", "Q_mix"};

VrLayout make_layout(std::vector<Op> ops, bool with_mix) {
  VrLayout l;
  l.ops = std::move(ops);
  l.queue_index = {0, 1, 2, 3, with_mix ? 4 : -1};
  l.K = with_mix ? 5 : 4;
  return l;
}

// Structural supports per op, in vr-queue space.
void op_support(Op op, std::vector<int>& in, std::vector<int>& out) {
  in.clear();
  out.clear();
  switch (op) {
    case Op::NC1: in = {Q1E}; out = {Q1_2}; break;
    case Op::NC2: in = {Q2E}; out = {Q2_1}; break;
    case Op::DX1: in = {Q1_2}; break;
    case Op::DX2: in = {Q2_1}; break;
    case Op::PM: in = {Q1E, Q2E}; out = {QMIX}; break;
    case Op::RC: in = {QMIX}; out = {Q1_2, Q2_1}; break;
    case Op::CX: in = {Q1_2, Q2_1}; break;
  }
}

SpnSpec spec_from_layout(const VrLayout& layout, const std::vector<ReceptionVector>& ps,
                         const std::vector<double>& weights) {
  if (ps.empty() || ps.size() != weights.size()) throw std::invalid_argument("need one weight per reception vector");
  SpnSpec s;
  s.K = layout.K;
  s.M = 2;
  s.N = static_cast<int>(layout.ops.size());
  s.A = Mat(s.K, 2);
  s.A(layout.queue_index[Q1E], 0) = 1;
  s.A(layout.queue_index[Q2E], 1) = 1;
  s.state_weight = weights;
  for (const auto& p : ps) {
    auto [bin, bout] = build_matrices(p);
    Mat bi(s.K, s.N), bo(s.K, s.N);
    for (int n = 0; n < s.N; ++n) {
      int col = static_cast<int>(layout.ops[n]);
      for (int vq = 0; vq < kNumVrQueues; ++vq) {
        int k = layout.queue_index[vq];
        if (k < 0) continue;
        bi(k, n) = bin(vq, col);
        bo(k, n) = bout(vq, col);
      }
    }
    s.bin_bar.push_back(std::move(bi));
    s.bout_bar.push_back(std::move(bo));
  }
  std::vector<int> in, out;
  for (Op op : layout.ops) {
    op_support(op, in, out);
    std::vector<int> si, so;
    for (int vq : in) si.push_back(layout.queue_index[vq]);
    for (int vq : out) so.push_back(layout.queue_index[vq]);
    s.s_in.push_back(si);
    s.s_out.push_back(so);
    s.sa_names.emplace_back(op_name(op));
  }
  for (int vq = 0; vq < kNumVrQueues; ++vq) {
    if (layout.queue_index[vq] >= 0) s.queue_names.emplace_back(kVrQueueNames[vq]);
  }
  s.activation_set = unit_activation_set(s.N);
  s.validate();
  return s;
}

std::vector<ReceptionVector> vectors_of(const ChannelSpec& ch) {
  ch.validate();
  std::vector<ReceptionVector> ps;
  for (const auto& st : ch.states) ps.push_back(st.p);
  return ps;
}

}  // namespace

const VrLayout& layout_7op() {
  static const VrLayout l = make_layout({Op::NC1, Op::NC2, Op::DX1, Op::DX2, Op::PM, Op::RC, Op::CX}, true);
  return l;
}

const VrLayout& layout_5op() {
  static const VrLayout l = make_layout({Op::NC1, Op::NC2, Op::DX1, Op::DX2, Op::CX}, false);
  return l;
}

SpnSpec build_7op_spec(const std::vector<ReceptionVector>& ps, const std::vector<double>& weights) {
  return spec_from_layout(layout_7op(), ps, weights);
}

SpnSpec build_5op_spec(const std::vector<ReceptionVector>& ps, const std::vector<double>& weights) {
  return spec_from_layout(layout_5op(), ps, weights);
}

SpnSpec build_routing_spec(const std::vector<ReceptionVector>& ps, const std::vector<double>& weights) {
  if (ps.empty() || ps.size() != weights.size()) throw std::invalid_argument("need one weight per reception vector");
  SpnSpec s;
  s.K = 2;
  s.M = 2;
  s.N = 2;
  s.A = Mat(2, 2);
  s.A(0, 0) = s.A(1, 1) = 1;
  s.state_weight = weights;
  for (const auto& p : ps) {
    p.validate();
    Mat bi(2, 2), bo(2, 2);
    bi(0, 0) = p.p_d1();
    bi(1, 1) = p.p_d2();
    s.bin_bar.push_back(bi);
    s.bout_bar.push_back(bo);
  }
  s.s_in = {{0}, {1}};
  s.s_out = {{}, {}};
  s.activation_set = unit_activation_set(2);
  s.queue_names = {"flow1", "flow2"};
  s.sa_names = {"send1", "send2"};
  s.validate();
  return s;
}

SpnSpec build_7op_spec(const ChannelSpec& ch) { return build_7op_spec(vectors_of(ch), ch.freqs()); }
SpnSpec build_5op_spec(const ChannelSpec& ch) { return build_5op_spec(vectors_of(ch), ch.freqs()); }
SpnSpec build_routing_spec(const ChannelSpec& ch) { return build_routing_spec(vectors_of(ch), ch.freqs()); }

VrColumn realized_column(Op op, ReceptionStatus r) {
  VrColumn c;
  const std::uint8_t any = anyone_hears(r), h1 = d1_hears(r), h2 = d2_hears(r);
  const std::uint8_t only1 = r == ReceptionStatus::D1Only, only2 = r == ReceptionStatus::D2Only;
  switch (op) {
    case Op::NC1: c.bin[Q1E] = any; c.bout[Q1_2] = only2; break;
    case Op::NC2: c.bin[Q2E] = any; c.bout[Q2_1] = only1; break;
    case Op::DX1: c.bin[Q1_2] = h1; break;
    case Op::DX2: c.bin[Q2_1] = h2; break;
    case Op::PM: c.bin[Q1E] = any; c.bin[Q2E] = any; c.bout[QMIX] = any; break;
    case Op::RC: c.bin[QMIX] = any; c.bout[Q1_2] = only2; c.bout[Q2_1] = only1; break;
    case Op::CX: c.bin[Q1_2] = h1; c.bin[Q2_1] = h2; break;
  }
  return c;
}

ServiceRealization realize(const VrLayout& layout, int sa, ReceptionStatus rcpt) {
  ServiceRealization r;
  realize_into(layout, sa, rcpt, r);
  return r;
}

void realize_into(const VrLayout& layout, int sa, ReceptionStatus rcpt, ServiceRealization& r) {
  r.sa = sa;
  r.bin.assign(layout.K, 0);
  r.bout.assign(layout.K, 0);
  if (sa < 0) return;
  VrColumn col = realized_column(layout.ops[sa], rcpt);
  for (int vq = 0; vq < kNumVrQueues; ++vq) {
    int k = layout.queue_index[vq];
    if (k < 0) continue;
    r.bin[k] = col.bin[vq];
    r.bout[k] = col.bout[vq];
  }
}

std::array<std::int64_t, kNumVrQueues> VrNetworkState::lengths() const {
  return {static_cast<std::int64_t>(q1_empty.size()), static_cast<std::int64_t>(q2_empty.size()),
          static_cast<std::int64_t>(q1_2.size()), static_cast<std::int64_t>(q2_1.size()),
          static_cast<std::int64_t>(q_mix.size())};
}

void VrNetworkState::add_arrival(PacketId id) {
  if (id.session == 1) q1_empty.push_back(id);
  else if (id.session == 2) q2_empty.push_back(id);
  else throw std::invalid_argument("session must be 1 or 2");
}

bool VrNetworkState::can_run(Op op) const {
  switch (op) {
    case Op::NC1: return !q1_empty.empty();
    case Op::NC2: return !q2_empty.empty();
    case Op::DX1: return !q1_2.empty();
    case Op::DX2: return !q2_1.empty();
    case Op::PM: return !q1_empty.empty() && !q2_empty.empty();
    case Op::RC: return !q_mix.empty();
    case Op::CX: return !q1_2.empty() && !q2_1.empty();
  }
  return false;
}

Transmission encode(Op op, const VrNetworkState& s) {
  if (!s.can_run(op)) throw std::logic_error(std::string("encode: infeasible op ") + op_name(op));
  Transmission tx;
  tx.op = op;
  switch (op) {
    case Op::NC1: tx.first = s.q1_empty.front(); break;
    case Op::NC2: tx.first = s.q2_empty.front(); break;
    case Op::DX1: tx.first = s.q1_2.front(); break;
    case Op::DX2: tx.first = s.q2_1.front(); break;
    case Op::PM:
      tx.kind = Transmission::Kind::XorPair;
      tx.first = s.q1_empty.front();
      tx.second = s.q2_empty.front();
      break;
    case Op::RC: {
      const MixTuple& m = s.q_mix.front();
      tx.first = m.rcpt_star == ReceptionStatus::D1Only ? m.y : m.x;
      break;
    }
    case Op::CX:
      tx.kind = Transmission::Kind::XorPair;
      tx.first = s.q1_2.front();
      tx.second = s.q2_1.front();
      break;
  }
  return tx;
}

namespace {

void push_q1_2(VrNetworkState& s, PacketId id) {
  s.q1_2.push_back(id);
  s.in_q1_2.insert(id.key());
}

void push_q2_1(VrNetworkState& s, PacketId id) {
  s.q2_1.push_back(id);
  s.in_q2_1.insert(id.key());
}

void pop_q1_2(VrNetworkState& s, MoveEvents& ev) {
  PacketId id = s.q1_2.front();
  s.q1_2.pop_front();
  s.in_q1_2.erase(id.key());
  ev.left_q1_2.push_back(id);
}

void pop_q2_1(VrNetworkState& s, MoveEvents& ev) {
  PacketId id = s.q2_1.front();
  s.q2_1.pop_front();
  s.in_q2_1.erase(id.key());
  ev.left_q2_1.push_back(id);
}

}  // namespace

void apply_outcome(Op op, ReceptionStatus r, VrNetworkState& s, MoveEvents& ev, const ReactiveTable& table) {
  if (!s.can_run(op)) throw std::logic_error(std::string("apply_outcome: infeasible op ") + op_name(op));
  switch (op) {
    case Op::NC1:
      if (r == ReceptionStatus::D2Only) push_q1_2(s, s.q1_empty.front());
      if (anyone_hears(r)) s.q1_empty.pop_front();
      break;
    case Op::NC2:
      if (r == ReceptionStatus::D1Only) push_q2_1(s, s.q2_empty.front());
      if (anyone_hears(r)) s.q2_empty.pop_front();
      break;
    case Op::DX1:
      if (d1_hears(r)) pop_q1_2(s, ev);
      break;
    case Op::DX2:
      if (d2_hears(r)) pop_q2_1(s, ev);
      break;
    case Op::PM:
      if (anyone_hears(r)) {
        MixTuple m{r, s.q1_empty.front(), s.q2_empty.front()};
        s.q1_empty.pop_front();
        s.q2_empty.pop_front();
        s.q_mix.push_back(m);
        s.mix_x.insert(m.x.key());
      }
      break;
    case Op::RC: {
      const MixTuple m = s.q_mix.front();
      MoveOutcome out = reactive_move(table, m.rcpt_star, r);
      if (out.kind == MoveKind::Keep) break;
      s.q_mix.pop_front();
      s.mix_x.erase(m.x.key());
      ev.left_mix.push_back(m);
      PacketId w = out.which == Which::X ? m.x : m.y;
      if (out.kind == MoveKind::ToQ1_2) push_q1_2(s, w);
      else if (out.kind == MoveKind::ToQ2_1) push_q2_1(s, w);
      break;
    }
    case Op::CX:
      if (d1_hears(r)) pop_q1_2(s, ev);
      if (d2_hears(r)) pop_q2_1(s, ev);
      break;
  }
}

}  // namespace opnc
