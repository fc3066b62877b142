#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "opnc/channel.hpp"
#include "opnc/spn.hpp"

namespace opnc {

enum class Op : std::uint8_t { NC1 = 0, NC2 = 1, DX1 = 2, DX2 = 3, PM = 4, RC = 5, CX = 6 };
constexpr int kNumOps = 7;
const char* op_name(Op op);

// Vr-queue order used throughout.
enum VrQueue : int { Q1E = 0, Q2E = 1, Q1_2 = 2, Q2_1 = 3, QMIX = 4 };
constexpr int kNumVrQueues = 5;

struct PacketId {
  std::uint8_t session = 0;  // 1 or 2
  std::uint32_t seq = 0;     // 1-based per session
  std::uint64_t key() const { return (static_cast<std::uint64_t>(session) << 32) | seq; }
  static PacketId from_key(std::uint64_t k) {
    return {static_cast<std::uint8_t>(k >> 32), static_cast<std::uint32_t>(k & 0xffffffffu)};
  }
  bool operator==(const PacketId&) const = default;
};

// Payload word of a packet; a pseudorandom function of (session, seq, run key).
std::uint64_t payload_of(PacketId id, std::uint64_t run_key);

struct MixTuple {
  ReceptionStatus rcpt_star = ReceptionStatus::Both;
  PacketId x;
  PacketId y;
};

struct Transmission {
  enum class Kind : std::uint8_t { Uncoded = 0, XorPair = 1 };
  Kind kind = Kind::Uncoded;
  Op op = Op::NC1;
  PacketId first;   // the uncoded packet, or X (PM) / the Q1_{2} head (CX)
  PacketId second;  // Y (PM) / the Q2_{1} head (CX); unused when uncoded
  bool operator==(const Transmission&) const = default;
};

// Tag byte (kind << 4 | op), one or two (session, seq big-endian) entries, payload.
std::vector<std::uint8_t> encode_wire(const Transmission& tx, const std::vector<std::uint8_t>& payload);
std::pair<Transmission, std::vector<std::uint8_t>> decode_wire(const std::vector<std::uint8_t>& bytes);

enum class MoveKind : std::uint8_t { Keep, Leave, ToQ1_2, ToQ2_1 };
enum class Which : std::uint8_t { None, X, Y };

struct MoveOutcome {
  MoveKind kind = MoveKind::Keep;
  Which which = Which::None;
  bool operator==(const MoveOutcome&) const = default;
};

// Indexed [(rcpt_star - 1) * 4 + rcpt_t].
using ReactiveTable = std::array<MoveOutcome, 12>;
const ReactiveTable& default_reactive_table();
MoveOutcome reactive_move(const ReactiveTable& table, ReceptionStatus rcpt_star, ReceptionStatus rcpt_t);
MoveOutcome reactive_move(ReceptionStatus rcpt_star, ReceptionStatus rcpt_t);

struct ReactiveMarginals {
  double to_q1_2 = 0.0;
  double to_q2_1 = 0.0;
  double leave = 0.0;
  double keep = 0.0;
};
ReactiveMarginals reactive_marginals(const ReactiveTable& table, ReceptionStatus rcpt_star, const ReceptionVector& p);

// 5 x 7 expected matrices in vr-queue and op order.
std::pair<Mat, Mat> build_matrices(const ReceptionVector& p);

// Specs over a list of reception vectors (channel states or rate-adaptation combos).
SpnSpec build_7op_spec(const std::vector<ReceptionVector>& ps, const std::vector<double>& weights);
SpnSpec build_5op_spec(const std::vector<ReceptionVector>& ps, const std::vector<double>& weights);
SpnSpec build_routing_spec(const std::vector<ReceptionVector>& ps, const std::vector<double>& weights);
SpnSpec build_7op_spec(const ChannelSpec& ch);
SpnSpec build_5op_spec(const ChannelSpec& ch);
SpnSpec build_routing_spec(const ChannelSpec& ch);

// Maps spec SA indices to ops and vr queues to spec queue indices (-1 when absent).
struct VrLayout {
  std::vector<Op> ops;
  std::array<int, kNumVrQueues> queue_index{};
  int K = 0;
};
const VrLayout& layout_7op();
const VrLayout& layout_5op();

struct VrColumn {
  std::array<std::uint8_t, kNumVrQueues> bin{};
  std::array<std::uint8_t, kNumVrQueues> bout{};
};
// Realized consumption/production of one op for a given reception outcome.
VrColumn realized_column(Op op, ReceptionStatus rcpt);
ServiceRealization realize(const VrLayout& layout, int sa, ReceptionStatus rcpt);
// Same, reusing the buffers of out.
void realize_into(const VrLayout& layout, int sa, ReceptionStatus rcpt, ServiceRealization& out);

struct VrNetworkState {
  std::deque<PacketId> q1_empty;
  std::deque<PacketId> q2_empty;
  std::deque<PacketId> q1_2;
  std::deque<PacketId> q2_1;
  std::deque<MixTuple> q_mix;
  // Membership indexes used by receiver pruning.
  std::unordered_set<std::uint64_t> in_q1_2;
  std::unordered_set<std::uint64_t> in_q2_1;
  std::unordered_set<std::uint64_t> mix_x;  // X key of every tuple in Q_mix

  std::array<std::int64_t, kNumVrQueues> lengths() const;
  void add_arrival(PacketId id);
  bool can_run(Op op) const;
};

// Packets that left Q1_{2}, Q2_{1} or Q_mix in one slot.
struct MoveEvents {
  std::vector<PacketId> left_q1_2;
  std::vector<PacketId> left_q2_1;
  std::vector<MixTuple> left_mix;
  void clear() {
    left_q1_2.clear();
    left_q2_1.clear();
    left_mix.clear();
  }
};

// Throws std::logic_error when op is infeasible.
Transmission encode(Op op, const VrNetworkState& state);
void apply_outcome(Op op, ReceptionStatus rcpt_t, VrNetworkState& state, MoveEvents& events,
                   const ReactiveTable& table = default_reactive_table());

}  // namespace opnc
