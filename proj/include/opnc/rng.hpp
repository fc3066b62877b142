#pragma once

#include <cstdint>
#include <random>

namespace opnc {

std::uint64_t splitmix64(std::uint64_t x);

// Derives an independent 64-bit seed for a named substream.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

enum class Substream : std::uint64_t {
  Channel = 1,
  Arrivals = 2,
  Reception = 3,
  Payload = 4,
  Service = 5,
};

class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : eng_(seed) {}

  // Uniform on [0,1) from the top 53 bits.
  double u01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
  std::uint64_t next() { return eng_(); }
  bool bernoulli(double p) { return u01() < p; }
  int poisson(double mean);

  std::mt19937_64& engine() { return eng_; }

 private:
  std::mt19937_64 eng_;
};

}  // namespace opnc
