#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "opnc/capacity.hpp"
#include "opnc/channel.hpp"
#include "opnc/sim.hpp"

namespace opnc {

struct ConfigIssue {
  std::string field;  // JSON pointer, "" for the document root
  int line = 0;       // 1-based, 0 when unknown
  std::string message;
};

struct ConfigError : std::runtime_error {
  std::vector<ConfigIssue> issues;
  explicit ConfigError(std::vector<ConfigIssue> list);
};

enum class ConfigMode { Slotted, RateAdaptation };

struct ExperimentConfig {
  std::string name;
  ConfigMode mode = ConfigMode::Slotted;
  ChannelSpec channel;
  std::vector<Combo> combos;
  std::vector<std::string> schemes;
  // Empty means the prop-fair point of the 7-op region (rate adaptation) or (1,1).
  std::vector<RatePoint> directions;
  std::vector<double> theta_grid;
  bool theta_relative = false;  // theta multiplies each scheme's boundary
  int trials = 1;
  double horizon = 1000;
  std::uint64_t seed = 1;
  std::string output;
  ArrivalKind arrivals = ArrivalKind::Bernoulli;
  int batch_max = 2;
  int pruning_period = 1;
  double sampling_stride = 0;
  Fallback fallback = Fallback::Idle;
  bool drain = false;

  bool operator==(const ExperimentConfig&) const = default;
};

// Throws ConfigError listing every problem found.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
std::string serialize_config(const ExperimentConfig& cfg);

// Parses "a:b:step" into an increasing grid including b when it lies on the grid.
std::vector<double> parse_theta_grid(const std::string& spec);
std::vector<double> make_grid(double start, double stop, double step);

const char* arrival_kind_name(ArrivalKind k);

}  // namespace opnc
