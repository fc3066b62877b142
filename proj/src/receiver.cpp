#include "opnc/receiver.hpp"

#include <string>
#include <unordered_map>

namespace opnc {

namespace {

std::string describe(PacketId id) {
  return (id.session == 1 ? "X" : "Y") + std::to_string(id.seq);
}

}  // namespace

SourceLists SourceLists::from(const VrNetworkState& s) {
  SourceLists l;
  l.q1_2.assign(s.q1_2.begin(), s.q1_2.end());
  l.q2_1.assign(s.q2_1.begin(), s.q2_1.end());
  l.q_mix.assign(s.q_mix.begin(), s.q_mix.end());
  return l;
}

bool ReceiverBuffer::has_sum(PacketId x, PacketId y) const {
  auto it = sums_.find(owner_ == Owner::D1 ? y.key() : x.key());
  return it != sums_.end() && it->second.x == x && it->second.y == y;
}

void ReceiverBuffer::deliver(PacketId id, std::uint64_t payload) {
  if (id.session != own_session()) {
    throw ProtocolViolation("d" + std::to_string(own_session()) + " asked to deliver foreign packet " + describe(id));
  }
  if (payload != payload_of(id, run_key_)) {
    throw ProtocolViolation("decoding error: payload mismatch for " + describe(id));
  }
  if (!delivered_.insert(id.key()).second) {
    throw ProtocolViolation("duplicate delivery of " + describe(id));
  }
}

void ReceiverBuffer::store_uncoded(PacketId id, std::uint64_t payload) {
  uncoded_[id.key()] = payload;
  dirty_uncoded_.push_back(id.key());
}

void ReceiverBuffer::store_sum(PacketId x, PacketId y, std::uint64_t payload) {
  SumEntry e{x, y, payload};
  std::uint64_t k = sum_key(e);
  own_to_sum_[own_key(e)] = k;
  sums_[k] = e;
  dirty_sums_.push_back(k);
}

void ReceiverBuffer::erase_sum(std::unordered_map<std::uint64_t, SumEntry>::iterator it) {
  own_to_sum_.erase(own_key(it->second));
  sums_.erase(it);
}

std::uint64_t ReceiverBuffer::need_uncoded(PacketId id) const {
  auto it = uncoded_.find(id.key());
  if (it == uncoded_.end()) {
    throw ProtocolViolation("d" + std::to_string(own_session()) + " lacks uncoded " + describe(id) + " to subtract");
  }
  return it->second;
}

void ReceiverBuffer::recover_direct(PacketId p, std::uint64_t payload) {
  if (p.session == own_session()) {
    deliver(p, payload);
    return;
  }
  auto it = sums_.find(p.key());
  if (it == sums_.end()) {
    throw ProtocolViolation("d" + std::to_string(own_session()) + " has no stored sum containing " + describe(p));
  }
  const SumEntry& e = it->second;
  deliver(owner_ == Owner::D1 ? e.x : e.y, e.payload ^ payload);
}

int ReceiverBuffer::on_receive(const Transmission& tx, std::uint64_t payload) {
  const std::size_t before = delivered_.size();
  const bool d1 = owner_ == Owner::D1;
  const Op nc_own = d1 ? Op::NC1 : Op::NC2;
  const Op dx_own = d1 ? Op::DX1 : Op::DX2;
  switch (tx.op) {
    case Op::NC1:
    case Op::NC2:
      if (tx.op == nc_own) deliver(tx.first, payload);
      else store_uncoded(tx.first, payload);
      break;
    case Op::PM:
      store_sum(tx.first, tx.second, payload);
      break;
    case Op::RC: {
      const PacketId p = tx.first;
      if (p.session == own_session()) {
        auto own = own_to_sum_.find(p.key());
        deliver(p, payload);
        if (own != own_to_sum_.end()) {
          const SumEntry& e = sums_.at(own->second);
          store_uncoded(d1 ? e.y : e.x, e.payload ^ payload);
        } else {
          store_uncoded(p, payload);
        }
      } else {
        recover_direct(p, payload);
        store_uncoded(p, payload);
      }
      break;
    }
    case Op::DX1:
    case Op::DX2:
      if (tx.op == dx_own) recover_direct(tx.first, payload);
      break;
    case Op::CX: {
      const PacketId mine = d1 ? tx.first : tx.second;
      const PacketId theirs = d1 ? tx.second : tx.first;
      recover_direct(mine, payload ^ need_uncoded(theirs));
      break;
    }
  }
  return static_cast<int>(delivered_.size() - before);
}

bool ReceiverBuffer::keep_uncoded(std::uint64_t key, const VrNetworkState& s) const {
  return owner_ == Owner::D1 ? s.in_q2_1.count(key) != 0 : s.in_q1_2.count(key) != 0;
}

bool ReceiverBuffer::keep_sum(const SumEntry& e, const VrNetworkState& s) const {
  if (s.mix_x.count(e.x.key())) return true;
  return owner_ == Owner::D1 ? s.in_q1_2.count(e.y.key()) != 0 : s.in_q2_1.count(e.x.key()) != 0;
}

void ReceiverBuffer::prune(const SourceLists& lists) {
  std::unordered_set<std::uint64_t> q12, q21;
  std::unordered_map<std::uint64_t, std::uint64_t> mix;  // x -> y
  for (auto id : lists.q1_2) q12.insert(id.key());
  for (auto id : lists.q2_1) q21.insert(id.key());
  for (const auto& m : lists.q_mix) mix[m.x.key()] = m.y.key();
  const auto& keep_u = owner_ == Owner::D1 ? q21 : q12;
  for (auto it = uncoded_.begin(); it != uncoded_.end();) {
    it = keep_u.count(it->first) ? std::next(it) : uncoded_.erase(it);
  }
  for (auto it = sums_.begin(); it != sums_.end();) {
    const SumEntry& e = it->second;
    auto m = mix.find(e.x.key());
    bool in_mix = m != mix.end() && m->second == e.y.key();
    bool waiting = owner_ == Owner::D1 ? q12.count(e.y.key()) != 0 : q21.count(e.x.key()) != 0;
    if (in_mix || waiting) {
      ++it;
    } else {
      auto dead = it++;
      erase_sum(dead);
    }
  }
  dirty_uncoded_.clear();
  dirty_sums_.clear();
}

void ReceiverBuffer::note_source_events(const MoveEvents& ev) {
  const bool d1 = owner_ == Owner::D1;
  for (auto id : ev.left_q1_2) (d1 ? dirty_sums_ : dirty_uncoded_).push_back(id.key());
  for (auto id : ev.left_q2_1) (d1 ? dirty_uncoded_ : dirty_sums_).push_back(id.key());
  for (const auto& m : ev.left_mix) dirty_sums_.push_back(d1 ? m.y.key() : m.x.key());
}

void ReceiverBuffer::prune_incremental(const VrNetworkState& s) {
  for (auto k : dirty_uncoded_) {
    if (uncoded_.count(k) && !keep_uncoded(k, s)) uncoded_.erase(k);
  }
  for (auto k : dirty_sums_) {
    auto it = sums_.find(k);
    if (it != sums_.end() && !keep_sum(it->second, s)) erase_sum(it);
  }
  dirty_uncoded_.clear();
  dirty_sums_.clear();
}

bool check_lemma1(const ReceiverBuffer& buf, std::int64_t len_q1_2, std::int64_t len_q2_1, std::int64_t len_mix) {
  auto u = static_cast<std::int64_t>(buf.uncoded_count());
  auto s = static_cast<std::int64_t>(buf.sums_count());
  if (buf.owner() == Owner::D1) return u <= len_q2_1 && s <= len_mix + len_q1_2;
  return u <= len_q1_2 && s <= len_mix + len_q2_1;
}

}  // namespace opnc
