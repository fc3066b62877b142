#pragma once

#include <cstdint>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "opnc/vnet.hpp"

namespace opnc {

struct ProtocolViolation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Owner : std::uint8_t { D1 = 1, D2 = 2 };

struct SumEntry {
  PacketId x;
  PacketId y;
  std::uint64_t payload = 0;  // payload(x) ^ payload(y)
};

// Snapshot of the source's vr-queue contents, ids only.
struct SourceLists {
  std::vector<PacketId> q1_2;
  std::vector<PacketId> q2_1;
  std::vector<MixTuple> q_mix;
  static SourceLists from(const VrNetworkState& s);
};

class ReceiverBuffer {
 public:
  ReceiverBuffer(Owner owner, std::uint64_t run_key) : owner_(owner), run_key_(run_key) {}

  // Handles one transmission heard by this receiver. Returns the number of
  // packets delivered upward. Throws ProtocolViolation on a missing
  // prerequisite, a duplicate delivery or a payload mismatch.
  int on_receive(const Transmission& tx, std::uint64_t payload);

  // Direct delivery, used by the routing baseline.
  void deliver(PacketId id, std::uint64_t payload);

  // Full pruning against explicit lists.
  void prune(const SourceLists& lists);
  // Equivalent pruning that only revisits entries touched since the last call.
  void note_source_events(const MoveEvents& ev);
  void prune_incremental(const VrNetworkState& s);

  Owner owner() const { return owner_; }
  std::size_t uncoded_count() const { return uncoded_.size(); }
  std::size_t sums_count() const { return sums_.size(); }
  std::size_t size() const { return uncoded_.size() + sums_.size(); }
  std::size_t delivered_count() const { return delivered_.size(); }
  bool has_uncoded(PacketId id) const { return uncoded_.count(id.key()) != 0; }
  bool has_sum(PacketId x, PacketId y) const;
  bool was_delivered(PacketId id) const { return delivered_.count(id.key()) != 0; }
  const std::unordered_set<std::uint64_t>& delivered() const { return delivered_; }

 private:
  std::uint8_t own_session() const { return static_cast<std::uint8_t>(owner_); }
  std::uint64_t sum_key(const SumEntry& e) const { return owner_ == Owner::D1 ? e.y.key() : e.x.key(); }
  std::uint64_t own_key(const SumEntry& e) const { return owner_ == Owner::D1 ? e.x.key() : e.y.key(); }
  void store_uncoded(PacketId id, std::uint64_t payload);
  void store_sum(PacketId x, PacketId y, std::uint64_t payload);
  void erase_sum(std::unordered_map<std::uint64_t, SumEntry>::iterator it);
  // Packet p (own or other session) has been recovered; deliver or decode via stored sum.
  void recover_direct(PacketId p, std::uint64_t payload);
  std::uint64_t need_uncoded(PacketId id) const;
  bool keep_uncoded(std::uint64_t key, const VrNetworkState& s) const;
  bool keep_sum(const SumEntry& e, const VrNetworkState& s) const;

  Owner owner_;
  std::uint64_t run_key_;
  std::unordered_map<std::uint64_t, std::uint64_t> uncoded_;  // key -> payload
  std::unordered_map<std::uint64_t, SumEntry> sums_;          // keyed by the other-session packet
  std::unordered_map<std::uint64_t, std::uint64_t> own_to_sum_;
  std::unordered_set<std::uint64_t> delivered_;
  std::vector<std::uint64_t> dirty_uncoded_;
  std::vector<std::uint64_t> dirty_sums_;
};

// For d1: uncoded <= |Q2_{1}| and sums <= |Q_mix| + |Q1_{2}|; d2 mirrored.
bool check_lemma1(const ReceiverBuffer& buf, std::int64_t len_q1_2, std::int64_t len_q2_1, std::int64_t len_mix);

}  // namespace opnc
