#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "opnc/capacity.hpp"
#include "opnc/channel.hpp"
#include "opnc/spn.hpp"

namespace opnc {

enum class SchemeId { RoutingBP, FiveOpDMW, SevenOpDMW_q, SevenOpDMW_qinter, SevenOpRA };

// A scheme plus, for rate adaptation, an optional combo it is pinned to.
struct SchemeRef {
  SchemeId id = SchemeId::SevenOpDMW_q;
  int fixed_combo = -1;  // 0-based; -1 means the scheduler may pick any combo

  // routing, 5op, 7op_q, 7op_qinter, 7op_ra, 5op_fixed<i> (1-based i)
  static SchemeRef parse(const std::string& name);
  std::string name() const;
  bool operator==(const SchemeRef&) const = default;
};

enum class ArrivalKind { Bernoulli, BatchUniform, Poisson };

struct TrialConfig {
  ChannelSpec channel;        // slotted mode
  std::vector<Combo> combos;  // rate-adaptation mode when nonempty
  SchemeRef scheme;
  double R1 = 0.0;
  double R2 = 0.0;
  ArrivalKind arrivals = ArrivalKind::Bernoulli;
  int batch_max = 2;          // batch-uniform: sizes 1..batch_max
  double horizon = 1e5;       // slots, or seconds in rate-adaptation mode
  std::uint64_t seed = 1;
  std::optional<std::uint64_t> reception_seed;  // replays a fixed arrival/channel trace
  int pruning_period = 1;
  double sampling_stride = 0;  // 0: max(1, min(100, horizon / 10))
  Fallback fallback = Fallback::Idle;
  bool drain = false;
  bool record_ledgers = false;
  bool check_invariants = true;
  const std::atomic<bool>* cancel = nullptr;

  bool rate_adaptation() const { return !combos.empty(); }
};

struct Sample {
  double t = 0;
  std::int64_t backlog = 0;
  std::int64_t delivered1 = 0;
  std::int64_t delivered2 = 0;
  std::int64_t buf_d1 = 0;
  std::int64_t buf_d2 = 0;
  std::vector<std::int64_t> queues;
};

struct LedgerSample {
  std::int64_t t = 0;
  std::vector<double> q;
  std::vector<double> q_inter;
  std::vector<double> Q_inter;
  std::vector<std::int64_t> Q;
  std::vector<std::int64_t> N_NA;
  std::vector<double> D;
};

struct TrialStats {
  std::vector<Sample> samples;
  std::vector<LedgerSample> ledgers;
  std::int64_t arrivals1 = 0;
  std::int64_t arrivals2 = 0;
  std::int64_t delivered1 = 0;
  std::int64_t delivered2 = 0;
  std::int64_t backlog_at_horizon = 0;
  std::int64_t final_backlog = 0;   // after the drain phase when drain is on
  double elapsed = 0;              // slots or seconds simulated
  std::int64_t steps = 0;          // scheduling decisions
  std::int64_t transmissions = 0;
  std::int64_t infeasible_idles = 0;
  std::int64_t null_activities = 0;
  double max_deficit = 0;
  std::int64_t max_buf_d1 = 0;
  std::int64_t max_buf_d2 = 0;
  std::int64_t bound_checks = 0;
  std::int64_t decode_errors = 0;  // nonzero runs abort, so this stays 0 on return
  std::uint64_t channel_trace_hash = 0;
  bool drained = false;
  bool drain_complete = false;
  std::int64_t drain_steps = 0;
};

struct Cancelled : std::runtime_error {
  Cancelled() : std::runtime_error("trial cancelled") {}
};

// Dispatches on cfg.rate_adaptation() and the scheme.
TrialStats run_trial(const TrialConfig& cfg);
TrialStats run_slotted(const TrialConfig& cfg);
TrialStats run_rate_adaptation(const TrialConfig& cfg);
TrialStats run_routing_bp(const TrialConfig& cfg);

// Capacity region matching a scheme and the channel/combos of cfg.
RegionLp scheme_region(const TrialConfig& cfg);

double effective_stride(const TrialConfig& cfg);

// Three-queue network where SA1 routes each packet of Q1 to Q2 or Q3 with
// probability 1/2 and SA2 drains Q2 and Q3 together; one arrival per slot.
SpnSpec counterexample_spec();

enum class CounterexamplePolicy { SchAvg, Greedy };

struct CounterexampleRun {
  std::vector<std::int64_t> gap;        // |Q2 - Q3| at each checkpoint
  std::vector<std::int64_t> sa1_count;  // SA1 executions up to each checkpoint
};

// Greedy runs SA2 when feasible and SA1 otherwise. Checkpoints must be increasing.
CounterexampleRun run_counterexample(CounterexamplePolicy policy, const std::vector<std::int64_t>& checkpoints,
                                     std::uint64_t seed);

// E|S_n| for a simple symmetric random walk after n steps.
double random_walk_abs_mean(std::int64_t n);

}  // namespace opnc
