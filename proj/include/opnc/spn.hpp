#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "opnc/rng.hpp"

namespace opnc {

struct InvariantViolation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Row-major dense matrix, sized for the handful of queues and activities here.
struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<double> v;

  Mat() = default;
  Mat(int r, int c, double fill = 0.0) : rows(r), cols(c), v(static_cast<std::size_t>(r) * c, fill) {}
  double& operator()(int r, int c) { return v[static_cast<std::size_t>(r) * cols + c]; }
  double operator()(int r, int c) const { return v[static_cast<std::size_t>(r) * cols + c]; }
  bool operator==(const Mat&) const = default;
};

// One joint outcome of a service activity: realized 0/1 columns with their probability.
struct JointOutcome {
  double prob = 0.0;
  std::vector<std::uint8_t> bin;
  std::vector<std::uint8_t> bout;
};

struct SpnSpec {
  int K = 0;
  int M = 0;
  int N = 0;
  Mat A;                               // K x M, nonnegative integers
  std::vector<Mat> bin_bar;            // per channel state, K x N
  std::vector<Mat> bout_bar;           // per channel state, K x N
  std::vector<double> state_weight;    // f_c, used by the capacity LPs
  std::vector<std::vector<int>> s_in;  // per SA
  std::vector<std::vector<int>> s_out; // per SA
  std::vector<std::vector<std::uint8_t>> activation_set;
  // Optional joint outcome lists, indexed [state][sa]. An empty list means every
  // support entry is an independent Bernoulli with the expected value.
  std::vector<std::vector<std::vector<JointOutcome>>> joint;
  std::vector<std::string> queue_names;
  std::vector<std::string> sa_names;

  int num_states() const { return static_cast<int>(bin_bar.size()); }
  // Structural checks; throws std::invalid_argument.
  void validate() const;
  // Every B̄in entry on an S_in support is strictly positive.
  bool service_entries_positive() const;
  bool acyclic() const;
  // SA indices that appear as unit vectors in the activation set, ascending.
  std::vector<int> allowed_sas() const;
};

// Activation set containing idle and every unit vector.
std::vector<std::vector<std::uint8_t>> unit_activation_set(int N);

struct SchedulerState {
  std::vector<double> q;
  std::vector<double> q_inter;
  std::vector<double> Q_inter;
  std::vector<std::int64_t> Q;
  std::vector<std::int64_t> N_NA;
  std::vector<double> D;
  std::int64_t t = 1;

  SchedulerState() = default;
  explicit SchedulerState(int K)
      : q(K, 0.0), q_inter(K, 0.0), Q_inter(K, 0.0), Q(K, 0), N_NA(K, 0), D(K, 0.0) {}
};

// Realized column of the scheduled SA. sa = -1 means idle.
struct ServiceRealization {
  int sa = -1;
  std::vector<std::uint8_t> bin;
  std::vector<std::uint8_t> bout;
};

enum class BpMode { Virtual, Inter };
enum class Fallback { Idle, FirstFeasible };

std::vector<double> backpressure(const std::vector<double>& q, const Mat& bin_bar, const Mat& bout_bar);

// Returns the SA index of the maximizer, or -1 for idle. Ties go to the lowest
// index; idle wins whenever the best value is <= 0.
int select_preferred(const std::vector<double>& d, const std::vector<std::vector<std::uint8_t>>& activation_set);
int select_preferred(const std::vector<double>& d, const std::vector<int>& allowed);

bool is_feasible(int sa, const std::vector<std::int64_t>& Q, const SpnSpec& spec);

std::vector<double> update_virtual(const std::vector<double>& q, const std::vector<int>& a, int sa,
                                   const Mat& bin_bar, const Mat& bout_bar, const Mat& A);

struct ServiceFlows {
  std::vector<double> mu_out;
  std::vector<double> mu_in;
};

ServiceFlows service_flows(const SpnSpec& spec, const std::vector<int>& a, const ServiceRealization& r);
std::vector<double> update_intermediate(const std::vector<double>& q_inter, const ServiceFlows& mu);
std::vector<double> update_intermediate_actual(const std::vector<double>& Q_inter, const ServiceFlows& mu);
// Updates N_NA and D. Call before the queue updates of the same slot.
void record_diagnostics(SchedulerState& s, const SpnSpec& spec, const ServiceRealization& r,
                        const ServiceFlows& mu);

ServiceRealization draw_realization(const SpnSpec& spec, int c, int sa, Rng& rng);

struct Decision {
  int state = 0;       // channel state or combo the decision refers to
  int preferred = -1;  // x*
  int executed = -1;   // what actually runs
  bool feasible = true;
};

// SCH_avg engine with preallocated scratch space for the per-slot loop.
class Scheduler {
 public:
  explicit Scheduler(const SpnSpec& spec, BpMode mode = BpMode::Virtual, Fallback fb = Fallback::Idle);

  Decision decide(const SchedulerState& s, int c);
  // Rate adaptation: argmax over (c, n) of d^(c)_n * scale[c]; ties go to the lowest (c, n).
  Decision decide_scaled(const SchedulerState& s, const std::vector<double>& scale);

  // Applies one slot. pref is the realization of x*, exec that of the executed SA
  // (may alias pref; ignored when idle). a has M entries.
  void commit(SchedulerState& s, int c, const std::vector<int>& a, const Decision& dec,
              const ServiceRealization& pref, const ServiceRealization& exec);

  // Per-slot ledger checks: D non-decreasing, D = Q_inter - q_inter, N_NA <= D,
  // nonnegativity. Enabled by default.
  bool check_invariants = true;
  // True while every preferred SA has been feasible since construction.
  bool always_feasible() const { return always_feasible_; }
  std::int64_t null_activities() const { return null_total_; }

  const SpnSpec& spec() const { return *spec_; }
  const std::vector<double>& last_backpressure() const { return d_; }

 private:
  void compute_d(const std::vector<double>& q, int c);
  int pick(const std::vector<std::int64_t>& Q, int preferred) const;

  const SpnSpec* spec_;
  BpMode mode_;
  Fallback fallback_;
  std::vector<int> allowed_;
  std::vector<double> diff_;  // per state, K x N of (B̄in - B̄out), column-major by SA
  std::vector<double> d_;
  std::vector<double> mu_out_;
  std::vector<double> mu_in_;
  std::vector<double> D_prev_;
  bool always_feasible_ = true;
  std::int64_t null_total_ = 0;
};

using RealizationSource = std::function<ServiceRealization(int c, int sa)>;

// One full SCH_avg slot. Returns the decision taken.
Decision step(SchedulerState& s, const SpnSpec& spec, int c, const std::vector<int>& a,
              const RealizationSource& source, BpMode mode, Fallback fb = Fallback::Idle);

}  // namespace opnc
