#include "doctest.h"
#include "opnc/receiver.hpp"
#include "opnc/rng.hpp"

using namespace opnc;

namespace {

using R = ReceptionStatus;
constexpr std::uint64_t kKey = 1234;

// Source plus both receivers, with full-list pruning after every step.
struct Link {
  VrNetworkState s;
  ReceiverBuffer d1{Owner::D1, kKey};
  ReceiverBuffer d2{Owner::D2, kKey};
  MoveEvents ev;

  void send(Op op, R r) {
    Transmission tx = encode(op, s);
    std::uint64_t w = payload_of(tx.first, kKey);
    if (tx.kind == Transmission::Kind::XorPair) w ^= payload_of(tx.second, kKey);
    if (d1_hears(r)) d1.on_receive(tx, w);
    if (d2_hears(r)) d2.on_receive(tx, w);
    apply_outcome(op, r, s, ev);
    ev.clear();
    SourceLists l = SourceLists::from(s);
    d1.prune(l);
    d2.prune(l);
  }
};

}  // namespace

TEST_CASE("classic XOR after two overheard packets") {
  Link k;
  k.s.add_arrival({1, 1});
  k.s.add_arrival({2, 1});
  k.send(Op::NC1, R::D2Only);  // d2 overhears X1
  CHECK(k.d2.has_uncoded({1, 1}));
  k.send(Op::NC2, R::D1Only);  // d1 overhears Y1
  CHECK(k.d1.has_uncoded({2, 1}));
  k.send(Op::CX, R::Both);
  CHECK(k.d1.was_delivered({1, 1}));
  CHECK(k.d2.was_delivered({2, 1}));
  CHECK(k.d1.size() == 0);
  CHECK(k.d2.size() == 0);
}

TEST_CASE("premix with reactive coding") {
  Link k;
  k.s.add_arrival({1, 1});
  k.s.add_arrival({2, 1});
  k.send(Op::PM, R::D1Only);  // d1 stores [X1 + Y1]
  CHECK(k.d1.has_sum({1, 1}, {2, 1}));
  CHECK(k.d2.sums_count() == 0);
  k.send(Op::RC, R::D1Only);  // RC sends Y1; d1 decodes X1 and keeps Y1 for d2's sake
  CHECK(k.d1.was_delivered({1, 1}));
  CHECK(k.d1.has_uncoded({2, 1}));
  CHECK(k.d1.sums_count() == 0);
  CHECK(k.s.q2_1.front() == PacketId{2, 1});
  k.send(Op::DX2, R::D2Only);
  CHECK(k.d2.was_delivered({2, 1}));
  CHECK(k.d1.size() == 0);
  CHECK(k.s.lengths() == std::array<std::int64_t, 5>{0, 0, 0, 0, 0});
}

TEST_CASE("reactive packet acting as a proxy") {
  Link k;
  k.s.add_arrival({1, 1});
  k.s.add_arrival({2, 1});
  k.send(Op::PM, R::D1Only);
  k.send(Op::RC, R::D2Only);  // Y1 reaches d2 only; d1 still needs Y1 to open the sum
  CHECK(k.d2.was_delivered({2, 1}));
  CHECK(k.s.q1_2.front() == PacketId{2, 1});
  CHECK(k.d1.has_sum({1, 1}, {2, 1}));
  k.send(Op::DX1, R::D1Only);
  CHECK(k.d1.was_delivered({1, 1}));
  CHECK(k.d1.size() == 0);
}

TEST_CASE("premix heard by both, then X resent") {
  Link k;
  k.s.add_arrival({1, 1});
  k.s.add_arrival({2, 1});
  k.send(Op::PM, R::Both);
  CHECK(k.d1.sums_count() == 1);
  CHECK(k.d2.sums_count() == 1);
  k.send(Op::RC, R::Both);  // X1 to both: d1 gets X1, d2 decodes Y1
  CHECK(k.d1.was_delivered({1, 1}));
  CHECK(k.d2.was_delivered({2, 1}));
  CHECK(k.d1.size() == 0);
  CHECK(k.d2.size() == 0);
}

TEST_CASE("protocol violations are reported") {
  ReceiverBuffer d1(Owner::D1, kKey);
  d1.deliver({1, 1}, payload_of({1, 1}, kKey));
  CHECK_THROWS_AS(d1.deliver({1, 1}, payload_of({1, 1}, kKey)), ProtocolViolation);
  CHECK_THROWS_AS(d1.deliver({1, 2}, 0), ProtocolViolation);
  CHECK_THROWS_AS(d1.deliver({2, 1}, payload_of({2, 1}, kKey)), ProtocolViolation);
  // CX without the overheard Y
  Transmission cx{Transmission::Kind::XorPair, Op::CX, {1, 3}, {2, 3}};
  CHECK_THROWS_AS(d1.on_receive(cx, 0), ProtocolViolation);
  // DX of a foreign packet without a stored sum
  Transmission dx{Transmission::Kind::Uncoded, Op::DX1, {2, 4}, {}};
  CHECK_THROWS_AS(d1.on_receive(dx, payload_of({2, 4}, kKey)), ProtocolViolation);
}

TEST_CASE("corrupted payload is a decoding error") {
  ReceiverBuffer d2(Owner::D2, kKey);
  Transmission nc1{Transmission::Kind::Uncoded, Op::NC1, {1, 1}, {}};
  d2.on_receive(nc1, payload_of({1, 1}, kKey));
  Transmission cx{Transmission::Kind::XorPair, Op::CX, {1, 1}, {2, 1}};
  std::uint64_t w = payload_of({1, 1}, kKey) ^ payload_of({2, 1}, kKey);
  CHECK_THROWS_AS(d2.on_receive(cx, w ^ 1), ProtocolViolation);
  CHECK(d2.on_receive(cx, w) == 1);
}

TEST_CASE("incremental and full pruning agree, and buffers stay within the queue bound") {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    Rng rng(seed);
    VrNetworkState s;
    ReceiverBuffer i1(Owner::D1, kKey), i2(Owner::D2, kKey), f1(Owner::D1, kKey), f2(Owner::D2, kKey);
    MoveEvents ev;
    std::uint32_t n1 = 0, n2 = 0;
    for (int t = 0; t < 3000; ++t) {
      if (rng.bernoulli(0.4)) s.add_arrival({1, ++n1});
      if (rng.bernoulli(0.4)) s.add_arrival({2, ++n2});
      std::vector<Op> ok;
      for (int o = 0; o < kNumOps; ++o) {
        if (s.can_run(static_cast<Op>(o))) ok.push_back(static_cast<Op>(o));
      }
      if (ok.empty()) continue;
      Op op = ok[rng.next() % ok.size()];
      auto r = static_cast<R>(rng.next() % 4);
      Transmission tx = encode(op, s);
      std::uint64_t w = payload_of(tx.first, kKey);
      if (tx.kind == Transmission::Kind::XorPair) w ^= payload_of(tx.second, kKey);
      if (d1_hears(r)) {
        i1.on_receive(tx, w);
        f1.on_receive(tx, w);
      }
      if (d2_hears(r)) {
        i2.on_receive(tx, w);
        f2.on_receive(tx, w);
      }
      apply_outcome(op, r, s, ev);
      i1.note_source_events(ev);
      i2.note_source_events(ev);
      ev.clear();
      i1.prune_incremental(s);
      i2.prune_incremental(s);
      SourceLists l = SourceLists::from(s);
      f1.prune(l);
      f2.prune(l);
      REQUIRE(i1.uncoded_count() == f1.uncoded_count());
      REQUIRE(i1.sums_count() == f1.sums_count());
      REQUIRE(i2.uncoded_count() == f2.uncoded_count());
      REQUIRE(i2.sums_count() == f2.sums_count());
      auto L = s.lengths();
      REQUIRE(check_lemma1(i1, L[Q1_2], L[Q2_1], L[QMIX]));
      REQUIRE(check_lemma1(i2, L[Q1_2], L[Q2_1], L[QMIX]));
      // Every delivered packet has left the source queues.
      REQUIRE(static_cast<std::int64_t>(n1) ==
              static_cast<std::int64_t>(i1.delivered_count()) + L[Q1E] + L[QMIX] + L[Q1_2]);
      REQUIRE(static_cast<std::int64_t>(n2) ==
              static_cast<std::int64_t>(i2.delivered_count()) + L[Q2E] + L[QMIX] + L[Q2_1]);
    }
  }
}

TEST_CASE("buffer bound check") {
  ReceiverBuffer d1(Owner::D1, kKey);
  Transmission nc2{Transmission::Kind::Uncoded, Op::NC2, {2, 1}, {}};
  d1.on_receive(nc2, payload_of({2, 1}, kKey));
  CHECK(check_lemma1(d1, 0, 1, 0));
  CHECK_FALSE(check_lemma1(d1, 1, 0, 0));
}
