#include "doctest.h"
#include "opnc/vnet.hpp"

using namespace opnc;

namespace {

using K = MoveKind;
using W = Which;
using R = ReceptionStatus;

void check_matrix(const Mat& m, const double (&want)[5][7]) {
  for (int k = 0; k < 5; ++k) {
    for (int n = 0; n < 7; ++n) CHECK(m(k, n) == doctest::Approx(want[k][n]).epsilon(1e-12));
  }
}

}  // namespace

TEST_CASE("expected service matrices match the worked example") {
  // Marginals (0.5, 0.7): p = (0.15, 0.15, 0.35, 0.35).
  auto [bin0, bout0] = build_matrices(vector_from_marginals(0.5, 0.7));
  const double in0[5][7] = {{0.85, 0, 0, 0, 0.85, 0, 0},
                            {0, 0.85, 0, 0, 0.85, 0, 0},
                            {0, 0, 0.5, 0, 0, 0, 0.5},
                            {0, 0, 0, 0.7, 0, 0, 0.7},
                            {0, 0, 0, 0, 0, 0.85, 0}};
  const double out0[5][7] = {{0, 0, 0, 0, 0, 0, 0},
                             {0, 0, 0, 0, 0, 0, 0},
                             {0.35, 0, 0, 0, 0, 0.35, 0},
                             {0, 0.15, 0, 0, 0, 0.15, 0},
                             {0, 0, 0, 0, 0.85, 0, 0}};
  check_matrix(bin0, in0);
  check_matrix(bout0, out0);

  auto [bin1, bout1] = build_matrices(vector_from_marginals(2.0 / 3, 1.0 / 3));
  const double in1[5][7] = {{7.0 / 9, 0, 0, 0, 7.0 / 9, 0, 0},
                            {0, 7.0 / 9, 0, 0, 7.0 / 9, 0, 0},
                            {0, 0, 2.0 / 3, 0, 0, 0, 2.0 / 3},
                            {0, 0, 0, 1.0 / 3, 0, 0, 1.0 / 3},
                            {0, 0, 0, 0, 0, 7.0 / 9, 0}};
  const double out1[5][7] = {{0, 0, 0, 0, 0, 0, 0},
                             {0, 0, 0, 0, 0, 0, 0},
                             {1.0 / 9, 0, 0, 0, 0, 1.0 / 9, 0},
                             {0, 4.0 / 9, 0, 0, 0, 4.0 / 9, 0},
                             {0, 0, 0, 0, 7.0 / 9, 0, 0}};
  check_matrix(bin1, in1);
  check_matrix(bout1, out1);
}

TEST_CASE("spec shapes") {
  ChannelSpec ch;
  ch.states = {{1, 1.0, {0.1, 0.2, 0.3, 0.4}}};
  SpnSpec s7 = build_7op_spec(ch), s5 = build_5op_spec(ch), sr = build_routing_spec(ch);
  CHECK(s7.K == 5);
  CHECK(s7.N == 7);
  CHECK(s7.M == 2);
  CHECK(s5.K == 4);
  CHECK(s5.N == 5);
  CHECK(sr.K == 2);
  CHECK(sr.N == 2);
  CHECK(sr.bin_bar[0](0, 0) == doctest::Approx(0.6));
  CHECK(sr.bin_bar[0](1, 1) == doctest::Approx(0.7));
  CHECK(s7.A(0, 0) == 1);
  CHECK(s7.A(1, 1) == 1);
  CHECK(s7.A(4, 0) == 0);
  CHECK(layout_5op().queue_index[QMIX] == -1);
  for (int n = 0; n < s5.N; ++n) {
    Op op = layout_5op().ops[n];
    CHECK(op != Op::PM);
    CHECK(op != Op::RC);
  }
}

TEST_CASE("reactive table entries") {
  const std::pair<R, std::array<MoveOutcome, 4>> want[] = {
      {R::D1Only, {{{K::Keep, W::None}, {K::ToQ2_1, W::Y}, {K::ToQ1_2, W::Y}, {K::Leave, W::None}}}},
      {R::D2Only, {{{K::Keep, W::None}, {K::ToQ2_1, W::X}, {K::ToQ1_2, W::X}, {K::Leave, W::None}}}},
      {R::Both, {{{K::Keep, W::None}, {K::ToQ2_1, W::Y}, {K::ToQ1_2, W::X}, {K::Leave, W::None}}}},
  };
  for (const auto& [star, row] : want) {
    for (int r = 0; r < 4; ++r) CHECK(reactive_move(star, static_cast<R>(r)) == row[r]);
  }
  CHECK_THROWS(reactive_move(R::None, R::Both));
}

TEST_CASE("reactive marginals reproduce the RC column") {
  ReceptionVector p{0.1, 0.2, 0.3, 0.4};
  for (R star : {R::D1Only, R::D2Only, R::Both}) {
    auto m = reactive_marginals(default_reactive_table(), star, p);
    CHECK(m.to_q1_2 == doctest::Approx(0.3));
    CHECK(m.to_q2_1 == doctest::Approx(0.2));
    CHECK(m.leave == doctest::Approx(0.4));
    CHECK(m.keep == doctest::Approx(0.1));
  }
}

TEST_CASE("realized columns agree with packet movements") {
  for (int o = 0; o < kNumOps; ++o) {
    for (int r = 0; r < 4; ++r) {
      for (R star : {R::D1Only, R::D2Only, R::Both}) {
        VrNetworkState s;
        s.add_arrival({1, 1});
        s.add_arrival({2, 1});
        s.q1_2.push_back({1, 5});
        s.in_q1_2.insert(PacketId{1, 5}.key());
        s.q2_1.push_back({2, 5});
        s.in_q2_1.insert(PacketId{2, 5}.key());
        s.q_mix.push_back({star, {1, 9}, {2, 9}});
        s.mix_x.insert(PacketId{1, 9}.key());
        auto before = s.lengths();
        MoveEvents ev;
        apply_outcome(static_cast<Op>(o), static_cast<R>(r), s, ev);
        auto after = s.lengths();
        VrColumn c = realized_column(static_cast<Op>(o), static_cast<R>(r));
        for (int k = 0; k < kNumVrQueues; ++k) CHECK(after[k] - before[k] == c.bout[k] - c.bin[k]);
        CHECK(s.in_q1_2.size() == s.q1_2.size());
        CHECK(s.in_q2_1.size() == s.q2_1.size());
        CHECK(s.mix_x.size() == s.q_mix.size());
      }
    }
  }
}

TEST_CASE("realize maps ops into spec queue order") {
  ServiceRealization r = realize(layout_5op(), 2, R::Both);  // DX1
  CHECK(r.bin == std::vector<std::uint8_t>{0, 0, 1, 0});
  ServiceRealization idle = realize(layout_7op(), -1, R::Both);
  CHECK(idle.bin == std::vector<std::uint8_t>(5, 0));
  ServiceRealization pm = realize(layout_7op(), 4, R::D2Only);
  CHECK(pm.bin == std::vector<std::uint8_t>{1, 1, 0, 0, 0});
  CHECK(pm.bout == std::vector<std::uint8_t>{0, 0, 0, 0, 1});
}

TEST_CASE("encoding picks the queue heads") {
  VrNetworkState s;
  CHECK_THROWS_AS(encode(Op::NC1, s), std::logic_error);
  s.add_arrival({1, 1});
  s.add_arrival({1, 2});
  s.add_arrival({2, 1});
  Transmission nc1 = encode(Op::NC1, s);
  CHECK(nc1.kind == Transmission::Kind::Uncoded);
  CHECK(nc1.first == PacketId{1, 1});
  Transmission pm = encode(Op::PM, s);
  CHECK(pm.kind == Transmission::Kind::XorPair);
  CHECK(pm.first == PacketId{1, 1});
  CHECK(pm.second == PacketId{2, 1});

  s.q_mix.push_back({R::D1Only, {1, 7}, {2, 7}});
  CHECK(encode(Op::RC, s).first == PacketId{2, 7});
  s.q_mix.front().rcpt_star = R::D2Only;
  CHECK(encode(Op::RC, s).first == PacketId{1, 7});
  s.q_mix.front().rcpt_star = R::Both;
  CHECK(encode(Op::RC, s).first == PacketId{1, 7});
}

TEST_CASE("movement sequence through the vr-network") {
  VrNetworkState s;
  MoveEvents ev;
  s.add_arrival({1, 1});
  s.add_arrival({2, 1});
  s.add_arrival({1, 2});
  s.add_arrival({2, 2});
  apply_outcome(Op::NC1, R::D2Only, s, ev);  // X1 overheard by d2 only
  CHECK(s.q1_2.front() == PacketId{1, 1});
  CHECK(s.in_q1_2.count(PacketId{1, 1}.key()));
  apply_outcome(Op::PM, R::D1Only, s, ev);  // [X2 + Y1] heard by d1
  CHECK(s.q_mix.size() == 1);
  CHECK(s.q_mix.front().rcpt_star == R::D1Only);
  CHECK(s.q1_empty.empty());
  apply_outcome(Op::RC, R::None, s, ev);  // lost, tuple stays
  CHECK(s.q_mix.size() == 1);
  apply_outcome(Op::RC, R::D2Only, s, ev);  // Y1 heard by d2 only: Y1 proxies X2 for d1
  CHECK(s.q_mix.empty());
  CHECK(ev.left_mix.size() == 1);
  CHECK(s.q1_2.back() == PacketId{2, 1});
  apply_outcome(Op::DX1, R::D2Only, s, ev);  // d1 misses it
  CHECK(s.q1_2.size() == 2);
  apply_outcome(Op::DX1, R::Both, s, ev);
  CHECK(s.q1_2.size() == 1);
  CHECK(ev.left_q1_2.size() == 1);
  CHECK_FALSE(s.in_q1_2.count(PacketId{1, 1}.key()));
}

TEST_CASE("wire format") {
  Transmission tx{Transmission::Kind::Uncoded, Op::NC2, {2, 5}, {}};
  auto bytes = encode_wire(tx, {0xab});
  CHECK(bytes == std::vector<std::uint8_t>{0x01, 0x02, 0, 0, 0, 5, 0xab});
  Transmission cx{Transmission::Kind::XorPair, Op::CX, {1, 0x01020304}, {2, 9}};
  auto b2 = encode_wire(cx, {});
  CHECK(b2 == std::vector<std::uint8_t>{0x16, 0x01, 1, 2, 3, 4, 0x02, 0, 0, 0, 9});
  auto [back, payload] = decode_wire(b2);
  CHECK(back == cx);
  CHECK(payload.empty());
  CHECK_THROWS(decode_wire({0x01, 0x02}));
  CHECK_THROWS(decode_wire({0x27, 1, 0, 0, 0, 1}));
  CHECK_THROWS(decode_wire({0x10, 1, 0, 0, 0, 1}));  // pair tag without second entry
}

TEST_CASE("payload words") {
  CHECK(payload_of({1, 1}, 5) == payload_of({1, 1}, 5));
  CHECK(payload_of({1, 1}, 5) != payload_of({2, 1}, 5));
  CHECK(payload_of({1, 1}, 5) != payload_of({1, 1}, 6));
  CHECK(PacketId::from_key(PacketId{2, 77}.key()) == PacketId{2, 77});
}

TEST_CASE("feasibility of ops") {
  VrNetworkState s;
  for (int o = 0; o < kNumOps; ++o) CHECK_FALSE(s.can_run(static_cast<Op>(o)));
  s.add_arrival({1, 1});
  CHECK(s.can_run(Op::NC1));
  CHECK_FALSE(s.can_run(Op::PM));
  s.add_arrival({2, 1});
  CHECK(s.can_run(Op::PM));
  CHECK_THROWS(s.add_arrival({3, 1}));
}
