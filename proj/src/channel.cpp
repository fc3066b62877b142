#include "opnc/channel.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

namespace opnc {

std::string to_string(ReceptionStatus r) {
  switch (r) {
    case ReceptionStatus::None: return "00";
    case ReceptionStatus::D1Only: return "10";
    case ReceptionStatus::D2Only: return "01";
    case ReceptionStatus::Both: return "11";
  }
  throw std::invalid_argument("bad reception status");
}

ReceptionStatus parse_reception(std::string_view s) {
  if (s == "00") return ReceptionStatus::None;
  if (s == "10") return ReceptionStatus::D1Only;
  if (s == "01") return ReceptionStatus::D2Only;
  if (s == "11") return ReceptionStatus::Both;
  throw std::invalid_argument("bad reception status string: " + std::string(s));
}

ReceptionVector ReceptionVector::from_array(const std::array<double, 4>& v) {
  ReceptionVector p{v[0], v[1], v[2], v[3]};
  p.validate();
  return p;
}

double ReceptionVector::prob(ReceptionStatus r) const {
  switch (r) {
    case ReceptionStatus::None: return none;
    case ReceptionStatus::D1Only: return d1only;
    case ReceptionStatus::D2Only: return d2only;
    case ReceptionStatus::Both: return both;
  }
  return 0.0;
}

void ReceptionVector::validate() const {
  for (double v : as_array()) {
    if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("reception probability outside [0,1]");
  }
  if (std::abs(none + d1only + d2only + both - 1.0) > 1e-12) {
    throw std::invalid_argument("reception vector does not sum to 1");
  }
}

ReceptionVector vector_from_marginals(double q1, double q2) {
  if (!(q1 >= 0.0 && q1 <= 1.0) || !(q2 >= 0.0 && q2 <= 1.0)) {
    throw std::invalid_argument("marginal probability outside [0,1]");
  }
  return {(1 - q1) * (1 - q2), q1 * (1 - q2), (1 - q1) * q2, q1 * q2};
}

ReceptionStatus sample_reception(const ReceptionVector& p, Rng& rng) {
  double u = rng.u01();
  if (u < p.none) return ReceptionStatus::None;
  u -= p.none;
  if (u < p.d1only) return ReceptionStatus::D1Only;
  u -= p.d1only;
  if (u < p.d2only) return ReceptionStatus::D2Only;
  // Remaining mass, including any rounding slack, goes to Both unless it is zero.
  if (p.both > 0.0) return ReceptionStatus::Both;
  if (p.d2only > 0.0) return ReceptionStatus::D2Only;
  if (p.d1only > 0.0) return ReceptionStatus::D1Only;
  return ReceptionStatus::None;
}

void ChannelSpec::validate() const {
  if (states.empty()) throw std::invalid_argument("channel has no states");
  double sum = 0.0;
  std::map<int, int> ids;
  for (const auto& s : states) {
    if (!(s.freq > 0.0)) throw std::invalid_argument("channel state frequency must be positive");
    if (!ids.emplace(s.id, 0).second) throw std::invalid_argument("duplicate channel state id");
    s.p.validate();
    sum += s.freq;
  }
  if (std::abs(sum - 1.0) > 1e-12) throw std::invalid_argument("channel frequencies do not sum to 1");
  if (mode == ChannelMode::Periodic) {
    if (sequence.empty()) throw std::invalid_argument("periodic channel needs a sequence");
    for (int id : sequence) {
      auto it = ids.find(id);
      if (it == ids.end()) throw std::invalid_argument("periodic sequence names an unknown state");
      ++it->second;
    }
    for (const auto& s : states) {
      double emp = static_cast<double>(ids[s.id]) / static_cast<double>(sequence.size());
      if (std::abs(emp - s.freq) > 1e-12) {
        throw std::invalid_argument("periodic sequence frequencies disagree with declared freq");
      }
    }
  }
}

int ChannelSpec::index_of(int id) const {
  for (std::size_t i = 0; i < states.size(); ++i) {
    if (states[i].id == id) return static_cast<int>(i);
  }
  throw std::invalid_argument("unknown channel state id");
}

std::vector<double> ChannelSpec::freqs() const {
  std::vector<double> f;
  f.reserve(states.size());
  for (const auto& s : states) f.push_back(s.freq);
  return f;
}

int sample_state_index(const ChannelSpec& spec, std::int64_t t, Rng& rng) {
  if (spec.mode == ChannelMode::Periodic) {
    auto len = static_cast<std::int64_t>(spec.sequence.size());
    return spec.index_of(spec.sequence[static_cast<std::size_t>(((t % len) + len) % len)]);
  }
  if (spec.states.size() == 1) return 0;
  double u = rng.u01();
  for (std::size_t i = 0; i + 1 < spec.states.size(); ++i) {
    if (u < spec.states[i].freq) return static_cast<int>(i);
    u -= spec.states[i].freq;
  }
  return static_cast<int>(spec.states.size()) - 1;
}

int sample_state(const ChannelSpec& spec, std::int64_t t, Rng& rng) {
  return spec.states[static_cast<std::size_t>(sample_state_index(spec, t, rng))].id;
}

}  // namespace opnc
