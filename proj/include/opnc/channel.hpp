#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "opnc/rng.hpp"

namespace opnc {

enum class ReceptionStatus : std::uint8_t { None = 0, D1Only = 1, D2Only = 2, Both = 3 };

// "00", "10", "01", "11": first digit is d1, second is d2.
std::string to_string(ReceptionStatus r);
ReceptionStatus parse_reception(std::string_view s);

inline bool d1_hears(ReceptionStatus r) {
  return r == ReceptionStatus::D1Only || r == ReceptionStatus::Both;
}
inline bool d2_hears(ReceptionStatus r) {
  return r == ReceptionStatus::D2Only || r == ReceptionStatus::Both;
}
inline bool anyone_hears(ReceptionStatus r) { return r != ReceptionStatus::None; }

struct ReceptionVector {
  double none = 1.0;
  double d1only = 0.0;
  double d2only = 0.0;
  double both = 0.0;

  static ReceptionVector from_array(const std::array<double, 4>& v);
  std::array<double, 4> as_array() const { return {none, d1only, d2only, both}; }

  double p_d1() const { return d1only + both; }
  double p_d2() const { return d2only + both; }
  double p_any() const { return d1only + d2only + both; }
  // d2 hears, d1 does not.
  double p_d1bar_d2() const { return d2only; }
  // d1 hears, d2 does not.
  double p_d1_d2bar() const { return d1only; }
  double prob(ReceptionStatus r) const;

  // Throws std::invalid_argument unless entries lie in [0,1] and sum to 1.
  void validate() const;
  bool operator==(const ReceptionVector&) const = default;
};

ReceptionVector vector_from_marginals(double q1, double q2);

ReceptionStatus sample_reception(const ReceptionVector& p, Rng& rng);

enum class ChannelMode { Iid, Periodic };

struct ChannelState {
  int id = 0;
  double freq = 1.0;
  ReceptionVector p;
  bool operator==(const ChannelState&) const = default;
};

struct ChannelSpec {
  std::vector<ChannelState> states;
  ChannelMode mode = ChannelMode::Iid;
  std::vector<int> sequence;  // state ids, periodic mode only

  void validate() const;
  int index_of(int id) const;
  std::vector<double> freqs() const;
  bool operator==(const ChannelSpec&) const = default;
};

// Index into spec.states. Periodic mode ignores the rng.
int sample_state_index(const ChannelSpec& spec, std::int64_t t, Rng& rng);
// Same draw, returned as the state id.
int sample_state(const ChannelSpec& spec, std::int64_t t, Rng& rng);

}  // namespace opnc
