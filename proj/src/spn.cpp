#include "opnc/spn.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace opnc {

namespace {

constexpr double kNullTol = 1e-9;

bool contains(const std::vector<int>& v, int x) { return std::find(v.begin(), v.end(), x) != v.end(); }

void fail(const std::string& msg) { throw std::invalid_argument("spn spec: " + msg); }

}  // namespace

void SpnSpec::validate() const {
  if (K <= 0 || N <= 0 || M < 0) fail("K and N must be positive");
  if (A.rows != K || A.cols != M) fail("A must be K x M");
  for (double x : A.v) {
    if (x < 0 || x != std::floor(x)) fail("A entries must be nonnegative integers");
  }
  if (bin_bar.empty() || bin_bar.size() != bout_bar.size()) fail("need matching B̄in/B̄out per state");
  if (!state_weight.empty() && state_weight.size() != bin_bar.size()) fail("state_weight size mismatch");
  if (static_cast<int>(s_in.size()) != N || static_cast<int>(s_out.size()) != N) fail("S_in/S_out must have N entries");
  for (std::size_t c = 0; c < bin_bar.size(); ++c) {
    const Mat& bi = bin_bar[c];
    const Mat& bo = bout_bar[c];
    if (bi.rows != K || bi.cols != N || bo.rows != K || bo.cols != N) fail("B̄ matrices must be K x N");
    for (int k = 0; k < K; ++k) {
      for (int n = 0; n < N; ++n) {
        if (!(bi(k, n) >= 0.0 && bi(k, n) <= 1.0) || !(bo(k, n) >= 0.0 && bo(k, n) <= 1.0)) {
          fail("B̄ entries must lie in [0,1]");
        }
        if (bi(k, n) > 0.0 && !contains(s_in[n], k)) fail("B̄in nonzero outside S_in");
        if (bo(k, n) > 0.0 && !contains(s_out[n], k)) fail("B̄out nonzero outside S_out");
      }
    }
  }
  for (int n = 0; n < N; ++n) {
    for (int k : s_in[n]) if (k < 0 || k >= K) fail("S_in index out of range");
    for (int k : s_out[n]) if (k < 0 || k >= K) fail("S_out index out of range");
  }
  bool has_zero = false;
  for (const auto& x : activation_set) {
    if (static_cast<int>(x.size()) != N) fail("activation vector length must be N");
    int nz = 0;
    for (auto b : x) {
      if (b > 1) fail("activation vectors must be binary");
      nz += b;
    }
    if (nz > 1) fail("activation vectors may activate at most one SA");
    if (nz == 0) has_zero = true;
  }
  if (!has_zero) fail("activation set must contain the zero vector");
  if (!acyclic()) fail("queue graph has a cycle");
  if (!joint.empty()) {
    if (joint.size() != bin_bar.size()) fail("joint outcome table must cover every state");
    for (std::size_t c = 0; c < joint.size(); ++c) {
      if (static_cast<int>(joint[c].size()) != N) fail("joint outcome table must cover every SA");
      for (int n = 0; n < N; ++n) {
        const auto& outs = joint[c][n];
        if (outs.empty()) continue;
        double total = 0.0;
        std::vector<double> ein(K, 0.0), eout(K, 0.0);
        for (const auto& o : outs) {
          if (static_cast<int>(o.bin.size()) != K || static_cast<int>(o.bout.size()) != K) fail("joint outcome size");
          total += o.prob;
          for (int k = 0; k < K; ++k) {
            ein[k] += o.prob * o.bin[k];
            eout[k] += o.prob * o.bout[k];
          }
        }
        if (std::abs(total - 1.0) > 1e-9) fail("joint outcome probabilities must sum to 1");
        for (int k = 0; k < K; ++k) {
          if (std::abs(ein[k] - bin_bar[c](k, n)) > 1e-9 || std::abs(eout[k] - bout_bar[c](k, n)) > 1e-9) {
            fail("joint outcome expectation disagrees with B̄");
          }
        }
      }
    }
  }
}

bool SpnSpec::service_entries_positive() const {
  for (const auto& bi : bin_bar) {
    for (int n = 0; n < N; ++n) {
      for (int k : s_in[n]) {
        if (!(bi(k, n) > 0.0)) return false;
      }
    }
  }
  return true;
}

bool SpnSpec::acyclic() const {
  std::vector<std::vector<int>> adj(K);
  std::vector<int> indeg(K, 0);
  for (int n = 0; n < N; ++n) {
    for (int a : s_in[n]) {
      for (int b : s_out[n]) {
        adj[a].push_back(b);
        ++indeg[b];
      }
    }
  }
  std::vector<int> ready;
  for (int k = 0; k < K; ++k) if (indeg[k] == 0) ready.push_back(k);
  int seen = 0;
  while (!ready.empty()) {
    int k = ready.back();
    ready.pop_back();
    ++seen;
    for (int b : adj[k]) if (--indeg[b] == 0) ready.push_back(b);
  }
  return seen == K;
}

std::vector<int> SpnSpec::allowed_sas() const {
  std::vector<int> out;
  for (const auto& x : activation_set) {
    for (int n = 0; n < N; ++n) {
      if (x[n]) out.push_back(n);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<std::vector<std::uint8_t>> unit_activation_set(int N) {
  std::vector<std::vector<std::uint8_t>> set;
  set.emplace_back(N, 0);
  for (int n = 0; n < N; ++n) {
    std::vector<std::uint8_t> x(N, 0);
    x[n] = 1;
    set.push_back(std::move(x));
  }
  return set;
}

std::vector<double> backpressure(const std::vector<double>& q, const Mat& bin_bar, const Mat& bout_bar) {
  if (static_cast<int>(q.size()) != bin_bar.rows || bin_bar.rows != bout_bar.rows || bin_bar.cols != bout_bar.cols) {
    throw std::invalid_argument("backpressure: dimension mismatch");
  }
  std::vector<double> d(bin_bar.cols, 0.0);
  for (int n = 0; n < bin_bar.cols; ++n) {
    for (int k = 0; k < bin_bar.rows; ++k) d[n] += q[k] * (bin_bar(k, n) - bout_bar(k, n));
  }
  return d;
}

int select_preferred(const std::vector<double>& d, const std::vector<int>& allowed) {
  int best = -1;
  double best_val = 0.0;
  for (int n : allowed) {
    if (d[n] > best_val) {
      best_val = d[n];
      best = n;
    }
  }
  return best;
}

int select_preferred(const std::vector<double>& d, const std::vector<std::vector<std::uint8_t>>& activation_set) {
  std::vector<int> allowed;
  for (const auto& x : activation_set) {
    for (std::size_t n = 0; n < x.size(); ++n) if (x[n]) allowed.push_back(static_cast<int>(n));
  }
  std::sort(allowed.begin(), allowed.end());
  return select_preferred(d, allowed);
}

bool is_feasible(int sa, const std::vector<std::int64_t>& Q, const SpnSpec& spec) {
  if (sa < 0) return true;
  for (int k : spec.s_in[sa]) {
    if (Q[k] < 1) return false;
  }
  return true;
}

std::vector<double> update_virtual(const std::vector<double>& q, const std::vector<int>& a, int sa,
                                   const Mat& bin_bar, const Mat& bout_bar, const Mat& A) {
  std::vector<double> out = q;
  for (int k = 0; k < A.rows; ++k) {
    for (int m = 0; m < A.cols; ++m) out[k] += A(k, m) * a[m];
    if (sa >= 0) out[k] += bout_bar(k, sa) - bin_bar(k, sa);
  }
  return out;
}

ServiceFlows service_flows(const SpnSpec& spec, const std::vector<int>& a, const ServiceRealization& r) {
  ServiceFlows mu{std::vector<double>(spec.K, 0.0), std::vector<double>(spec.K, 0.0)};
  for (int k = 0; k < spec.K; ++k) {
    for (int m = 0; m < spec.M; ++m) mu.mu_in[k] += spec.A(k, m) * a[m];
    if (r.sa >= 0) {
      mu.mu_out[k] += r.bin[k];
      mu.mu_in[k] += r.bout[k];
    }
  }
  return mu;
}

std::vector<double> update_intermediate(const std::vector<double>& q_inter, const ServiceFlows& mu) {
  std::vector<double> out = q_inter;
  for (std::size_t k = 0; k < out.size(); ++k) out[k] += mu.mu_in[k] - mu.mu_out[k];
  return out;
}

std::vector<double> update_intermediate_actual(const std::vector<double>& Q_inter, const ServiceFlows& mu) {
  std::vector<double> out = Q_inter;
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = std::max(0.0, out[k] - mu.mu_out[k]) + mu.mu_in[k];
  return out;
}

void record_diagnostics(SchedulerState& s, const SpnSpec& spec, const ServiceRealization& r,
                        const ServiceFlows& mu) {
  if (r.sa < 0) return;
  for (int k : spec.s_in[r.sa]) {
    if (s.Q_inter[k] < r.bin[k] - kNullTol) ++s.N_NA[k];
  }
  for (int k = 0; k < spec.K; ++k) s.D[k] += std::max(0.0, mu.mu_out[k] - s.Q_inter[k]);
}

ServiceRealization draw_realization(const SpnSpec& spec, int c, int sa, Rng& rng) {
  ServiceRealization r;
  r.sa = sa;
  r.bin.assign(spec.K, 0);
  r.bout.assign(spec.K, 0);
  if (sa < 0) return r;
  if (!spec.joint.empty() && !spec.joint[c][sa].empty()) {
    const auto& outs = spec.joint[c][sa];
    double u = rng.u01();
    std::size_t i = 0;
    for (; i + 1 < outs.size(); ++i) {
      if (u < outs[i].prob) break;
      u -= outs[i].prob;
    }
    r.bin = outs[i].bin;
    r.bout = outs[i].bout;
    return r;
  }
  for (int k : spec.s_in[sa]) r.bin[k] = rng.bernoulli(spec.bin_bar[c](k, sa)) ? 1 : 0;
  for (int k : spec.s_out[sa]) r.bout[k] = rng.bernoulli(spec.bout_bar[c](k, sa)) ? 1 : 0;
  return r;
}

Scheduler::Scheduler(const SpnSpec& spec, BpMode mode, Fallback fb)
    : spec_(&spec), mode_(mode), fallback_(fb), allowed_(spec.allowed_sas()) {
  const int K = spec.K, N = spec.N;
  diff_.assign(static_cast<std::size_t>(spec.num_states()) * K * N, 0.0);
  for (int c = 0; c < spec.num_states(); ++c) {
    for (int n = 0; n < N; ++n) {
      for (int k = 0; k < K; ++k) {
        diff_[(static_cast<std::size_t>(c) * N + n) * K + k] = spec.bin_bar[c](k, n) - spec.bout_bar[c](k, n);
      }
    }
  }
  d_.assign(N, 0.0);
  mu_out_.assign(K, 0.0);
  mu_in_.assign(K, 0.0);
  D_prev_.assign(K, 0.0);
}

void Scheduler::compute_d(const std::vector<double>& q, int c) {
  const int K = spec_->K, N = spec_->N;
  const double* base = diff_.data() + static_cast<std::size_t>(c) * N * K;
  for (int n = 0; n < N; ++n) {
    const double* col = base + static_cast<std::size_t>(n) * K;
    double acc = 0.0;
    for (int k = 0; k < K; ++k) acc += q[k] * col[k];
    d_[n] = acc;
  }
}

int Scheduler::pick(const std::vector<std::int64_t>& Q, int preferred) const {
  if (preferred < 0 || is_feasible(preferred, Q, *spec_)) return preferred;
  if (fallback_ == Fallback::Idle) return -1;
  int best = -1;
  double best_val = 0.0;
  for (int n : allowed_) {
    if (n == preferred || !is_feasible(n, Q, *spec_)) continue;
    if (d_[n] > best_val) {
      best_val = d_[n];
      best = n;
    }
  }
  return best;
}

Decision Scheduler::decide(const SchedulerState& s, int c) {
  compute_d(mode_ == BpMode::Inter ? s.q_inter : s.q, c);
  Decision dec;
  dec.state = c;
  dec.preferred = select_preferred(d_, allowed_);
  dec.feasible = is_feasible(dec.preferred, s.Q, *spec_);
  dec.executed = pick(s.Q, dec.preferred);
  return dec;
}

Decision Scheduler::decide_scaled(const SchedulerState& s, const std::vector<double>& scale) {
  const auto& q = mode_ == BpMode::Inter ? s.q_inter : s.q;
  Decision dec;
  double best_val = 0.0;
  for (int c = 0; c < spec_->num_states(); ++c) {
    compute_d(q, c);
    for (int n : allowed_) {
      double v = d_[n] * scale[c];
      if (v > best_val) {
        best_val = v;
        dec.state = c;
        dec.preferred = n;
      }
    }
  }
  compute_d(q, dec.state);
  dec.feasible = is_feasible(dec.preferred, s.Q, *spec_);
  dec.executed = pick(s.Q, dec.preferred);
  return dec;
}

void Scheduler::commit(SchedulerState& s, int c, const std::vector<int>& a, const Decision& dec,
                       const ServiceRealization& pref, const ServiceRealization& exec) {
  const SpnSpec& sp = *spec_;
  const int K = sp.K;
  const int n = dec.preferred;
  for (int k = 0; k < K; ++k) {
    double arr = 0.0;
    for (int m = 0; m < sp.M; ++m) arr += sp.A(k, m) * a[m];
    mu_out_[k] = n >= 0 ? pref.bin[k] : 0.0;
    mu_in_[k] = arr + (n >= 0 ? pref.bout[k] : 0.0);
    if (n >= 0) s.q[k] -= diff_[(static_cast<std::size_t>(c) * sp.N + n) * K + k];
    s.q[k] += arr;
  }
  if (check_invariants) D_prev_ = s.D;
  if (n >= 0) {
    for (int k : sp.s_in[n]) {
      if (s.Q_inter[k] < pref.bin[k] - kNullTol) {
        ++s.N_NA[k];
        ++null_total_;
      }
    }
  }
  for (int k = 0; k < K; ++k) {
    s.D[k] += std::max(0.0, mu_out_[k] - s.Q_inter[k]);
    s.q_inter[k] += mu_in_[k] - mu_out_[k];
    s.Q_inter[k] = std::max(0.0, s.Q_inter[k] - mu_out_[k]) + mu_in_[k];
  }
  if (!dec.feasible) always_feasible_ = false;
  if (dec.executed >= 0) {
    for (int k = 0; k < K; ++k) s.Q[k] += static_cast<std::int64_t>(exec.bout[k]) - exec.bin[k];
  }
  for (int k = 0; k < K; ++k) {
    double arr = 0.0;
    for (int m = 0; m < sp.M; ++m) arr += sp.A(k, m) * a[m];
    s.Q[k] += static_cast<std::int64_t>(arr);
  }
  ++s.t;

  if (!check_invariants) return;
  for (int k = 0; k < K; ++k) {
    const char* why = nullptr;
    if (s.D[k] < D_prev_[k]) why = "deficit decreased";
    else if (std::abs(s.D[k] - (s.Q_inter[k] - s.q_inter[k])) > 1e-9) why = "D != Q_inter - q_inter";
    else if (static_cast<double>(s.N_NA[k]) > s.D[k] + 1e-9) why = "N_NA exceeds D";
    else if (s.Q[k] < 0 || s.Q_inter[k] < 0) why = "negative queue";
    else if (always_feasible_ && static_cast<double>(s.Q[k]) != s.Q_inter[k]) why = "Q != Q_inter without infeasible slots";
    if (why) {
      std::ostringstream msg;
      msg << why << " at queue " << k << ", t=" << s.t << " (D=" << s.D[k] << ", Q_inter=" << s.Q_inter[k]
          << ", q_inter=" << s.q_inter[k] << ", Q=" << s.Q[k] << ", N_NA=" << s.N_NA[k] << ")";
      throw InvariantViolation(msg.str());
    }
  }
}

Decision step(SchedulerState& s, const SpnSpec& spec, int c, const std::vector<int>& a,
              const RealizationSource& source, BpMode mode, Fallback fb) {
  Scheduler sch(spec, mode, fb);
  sch.check_invariants = false;
  Decision dec = sch.decide(s, c);
  ServiceRealization pref = source(c, dec.preferred);
  if (dec.executed >= 0 && dec.executed != dec.preferred) {
    ServiceRealization exec = source(c, dec.executed);
    sch.commit(s, c, a, dec, pref, exec);
  } else {
    sch.commit(s, c, a, dec, pref, pref);
  }
  return dec;
}

}  // namespace opnc
