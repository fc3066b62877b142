#include "opnc/cli.hpp"

#include <cmath>
#include <condition_variable>
#include <cstdio>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "opnc/capacity.hpp"
#include "opnc/config.hpp"
#include "opnc/receiver.hpp"
#include "opnc/sim.hpp"
#include "opnc/verify.hpp"

namespace opnc {

std::atomic<bool>& interrupt_flag() {
  static std::atomic<bool> flag{false};
  return flag;
}

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

struct CommonOpts {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  int parallel = 1;
  std::vector<std::string> schemes;
  std::string theta_grid;
  std::string fault;
};

TrialConfig base_trial(const ExperimentConfig& ec) {
  TrialConfig t;
  if (ec.mode == ConfigMode::RateAdaptation) t.combos = ec.combos;
  else t.channel = ec.channel;
  t.arrivals = ec.arrivals;
  t.batch_max = ec.batch_max;
  t.horizon = ec.horizon;
  t.pruning_period = ec.pruning_period;
  t.sampling_stride = ec.sampling_stride;
  t.fallback = ec.fallback;
  t.drain = ec.drain;
  return t;
}

std::vector<RatePoint> directions_of(const ExperimentConfig& ec) {
  if (!ec.directions.empty()) return ec.directions;
  if (ec.mode == ConfigMode::RateAdaptation) return {prop_fair(rate_adaptation_region(ec.combos, RaScheme::SevenOp))};
  return {{1.0, 1.0}};
}

RegionLp region_of(const ExperimentConfig& ec, const std::string& scheme) {
  if (scheme == "blockcode") return blockcode_region(ec.channel);
  TrialConfig t = base_trial(ec);
  t.scheme = SchemeRef::parse(scheme);
  return scheme_region(t);
}

// Output stream that is either a file or the given fallback.
struct Sink {
  std::ofstream file;
  std::ostream* os;
  Sink(const std::string& path, std::ostream& fallback) : os(&fallback) {
    if (!path.empty()) {
      file.open(path);
      if (!file) throw ConfigError({{"", 0, "cannot write " + path}});
      os = &file;
    }
  }
};

int cmd_capacity(const CommonOpts& o, std::ostream& out) {
  ExperimentConfig ec = load_config(o.config);
  if (!o.schemes.empty()) ec.schemes = o.schemes;
  Sink sink(o.out.empty() ? ec.output : o.out, out);
  std::ostream& os = *sink.os;
  os << "scheme,direction,theta_star,R1,R2,sum\n";
  for (const auto& d : directions_of(ec)) {
    for (const auto& s : ec.schemes) {
      double th = boundary(region_of(ec, s), d);
      os << s << "," << fmt(d.R1) << ":" << fmt(d.R2) << "," << fmt(th) << "," << fmt(th * d.R1) << ","
         << fmt(th * d.R2) << "," << fmt(th * (d.R1 + d.R2)) << "\n";
    }
  }
  os.flush();
  return kExitOk;
}

struct Job {
  std::size_t scheme;
  std::size_t theta;
  int trial;
};

enum class JobState { Pending, Done, Failed, Cancelled };

int cmd_sweep(const CommonOpts& o, std::ostream& out, std::ostream& err) {
  ExperimentConfig ec = load_config(o.config);
  if (!o.schemes.empty()) ec.schemes = o.schemes;
  if (o.trials) {
    if (*o.trials < 1) throw ConfigError({{"/trials", 0, "trials must be >= 1"}});
    ec.trials = *o.trials;
  }
  if (o.seed) ec.seed = *o.seed;
  if (!o.theta_grid.empty()) {
    try {
      ec.theta_grid = parse_theta_grid(o.theta_grid);
    } catch (const std::exception& e) {
      throw ConfigError({{"/theta_grid", 0, e.what()}});
    }
  }
  if (ec.theta_grid.empty()) throw ConfigError({{"/theta_grid", 0, "sweep needs a theta grid"}});
  if (o.parallel < 1) throw ConfigError({{"", 0, "--parallel must be >= 1"}});

  const RatePoint dir = directions_of(ec).front();
  std::vector<TrialConfig> scheme_cfg;
  std::vector<double> theta_star;
  for (std::size_t i = 0; i < ec.schemes.size(); ++i) {
    if (ec.schemes[i] == "blockcode") {
      throw ConfigError({{"/schemes/" + std::to_string(i), 0, "blockcode has no dynamic scheme to simulate"}});
    }
    TrialConfig t = base_trial(ec);
    try {
      t.scheme = SchemeRef::parse(ec.schemes[i]);
    } catch (const std::exception& e) {
      throw ConfigError({{"/schemes/" + std::to_string(i), 0, e.what()}});
    }
    theta_star.push_back(boundary(scheme_region(t), dir));
    scheme_cfg.push_back(t);
  }

  std::vector<Job> jobs;
  for (std::size_t s = 0; s < ec.schemes.size(); ++s) {
    for (std::size_t th = 0; th < ec.theta_grid.size(); ++th) {
      for (int k = 0; k < ec.trials; ++k) jobs.push_back({s, th, k});
    }
  }
  auto make_cfg = [&](const Job& j) {
    TrialConfig t = scheme_cfg[j.scheme];
    double theta = ec.theta_grid[j.theta] * (ec.theta_relative ? theta_star[j.scheme] : 1.0);
    t.R1 = theta * dir.R1;
    t.R2 = theta * dir.R2;
    t.seed = ec.seed + static_cast<std::uint64_t>(j.trial);
    t.cancel = &interrupt_flag();
    return t;
  };
  // Surface bad rates before any thread starts.
  for (const auto& j : jobs) {
    if (j.trial != 0) continue;
    TrialConfig t = make_cfg(j);
    t.horizon = 1;
    t.drain = false;
    t.cancel = nullptr;
    try {
      run_trial(t);
    } catch (const std::invalid_argument& e) {
      throw ConfigError({{"/theta_grid", 0, ec.schemes[j.scheme] + " at theta " + fmt(ec.theta_grid[j.theta]) + ": " + e.what()}});
    }
  }

  std::vector<JobState> state(jobs.size(), JobState::Pending);
  std::vector<std::unique_ptr<TrialStats>> result(jobs.size());
  std::vector<std::string> error(jobs.size());
  std::vector<int> error_code(jobs.size(), kExitOk);
  std::mutex mu;
  std::condition_variable cv;
  std::atomic<std::size_t> next{0};
  std::atomic<bool> abort{false};
  int running = std::min<int>(o.parallel, static_cast<int>(jobs.size()));

  auto worker = [&] {
    while (true) {
      if (abort.load() || interrupt_flag().load()) break;
      std::size_t i = next.fetch_add(1);
      if (i >= jobs.size()) break;
      JobState st = JobState::Done;
      std::unique_ptr<TrialStats> r;
      std::string msg;
      int code = kExitOk;
      try {
        r = std::make_unique<TrialStats>(run_trial(make_cfg(jobs[i])));
      } catch (const Cancelled&) {
        st = JobState::Cancelled;
      } catch (const InvariantViolation& e) {
        st = JobState::Failed, msg = std::string("invariant violation: ") + e.what(), code = kExitInvariant;
      } catch (const ProtocolViolation& e) {
        st = JobState::Failed, msg = std::string("protocol violation: ") + e.what(), code = kExitInvariant;
      } catch (const SolverFailure& e) {
        st = JobState::Failed, msg = std::string("solver failure: ") + e.what(), code = kExitSolver;
      } catch (const std::exception& e) {
        st = JobState::Failed, msg = e.what(), code = kExitInvariant;
      }
      if (st == JobState::Failed) abort = true;
      {
        std::lock_guard<std::mutex> lk(mu);
        state[i] = st;
        result[i] = std::move(r);
        error[i] = msg;
        error_code[i] = code;
      }
      cv.notify_all();
    }
    {
      std::lock_guard<std::mutex> lk(mu);
      --running;
    }
    cv.notify_all();
  };

  const std::string out_path = o.out.empty() ? ec.output : o.out;
  Sink sink(out_path, out);
  std::ostream& os = *sink.os;
  os << "scheme,theta,seed,t,backlog,delivered1,delivered2,buf_d1,buf_d2\n";

  std::vector<std::thread> pool;
  for (int w = 0; w < o.parallel && w < static_cast<int>(jobs.size()); ++w) pool.emplace_back(worker);

  struct Point {
    int n = 0;
    double sum = 0, sum2 = 0, del1 = 0, del2 = 0, buf1 = 0, buf2 = 0;
    bool drained_all = true;
  };
  std::vector<Point> points(ec.schemes.size() * ec.theta_grid.size());
  int rc = kExitOk;
  std::string failure;
  std::size_t written = 0;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    std::unique_lock<std::mutex> lk(mu);
    cv.wait(lk, [&] { return state[i] != JobState::Pending || running == 0; });
    if (state[i] == JobState::Pending || state[i] == JobState::Cancelled) break;
    if (state[i] == JobState::Failed) {
      rc = error_code[i];
      failure = ec.schemes[jobs[i].scheme] + " theta=" + fmt(ec.theta_grid[jobs[i].theta]) + ": " + error[i];
      break;
    }
    std::unique_ptr<TrialStats> r = std::move(result[i]);
    lk.unlock();
    const Job& j = jobs[i];
    const std::string prefix =
        ec.schemes[j.scheme] + "," + fmt(ec.theta_grid[j.theta]) + "," + std::to_string(ec.seed + j.trial) + ",";
    for (const auto& s : r->samples) {
      os << prefix << fmt(s.t) << "," << s.backlog << "," << s.delivered1 << "," << s.delivered2 << "," << s.buf_d1
         << "," << s.buf_d2 << "\n";
    }
    os.flush();
    Point& p = points[j.scheme * ec.theta_grid.size() + j.theta];
    auto b = static_cast<double>(r->backlog_at_horizon);
    ++p.n;
    p.sum += b;
    p.sum2 += b * b;
    p.del1 += static_cast<double>(r->delivered1);
    p.del2 += static_cast<double>(r->delivered2);
    p.buf1 += static_cast<double>(r->max_buf_d1);
    p.buf2 += static_cast<double>(r->max_buf_d2);
    if (r->drained && !r->drain_complete) p.drained_all = false;
    ++written;
  }
  abort = true;
  for (auto& t : pool) t.join();
  if (rc == kExitOk && written < jobs.size() && interrupt_flag().load()) rc = kExitInterrupted;

  if (!out_path.empty()) {
    std::ofstream sum(out_path + ".summary.csv");
    sum << "scheme,theta,theta_star,R1,R2,trials,mean_backlog,stderr_backlog,mean_delivered1,mean_delivered2,"
           "mean_max_buf_d1,mean_max_buf_d2,drain_complete\n";
    for (std::size_t s = 0; s < ec.schemes.size(); ++s) {
      for (std::size_t th = 0; th < ec.theta_grid.size(); ++th) {
        const Point& p = points[s * ec.theta_grid.size() + th];
        if (p.n == 0) continue;
        double mean = p.sum / p.n;
        double var = p.n > 1 ? std::max(0.0, (p.sum2 - p.n * mean * mean) / (p.n - 1)) : 0.0;
        double theta = ec.theta_grid[th] * (ec.theta_relative ? theta_star[s] : 1.0);
        sum << ec.schemes[s] << "," << fmt(ec.theta_grid[th]) << "," << fmt(theta_star[s]) << ","
            << fmt(theta * dir.R1) << "," << fmt(theta * dir.R2) << "," << p.n << "," << fmt(mean) << ","
            << fmt(std::sqrt(var / p.n)) << "," << fmt(p.del1 / p.n) << "," << fmt(p.del2 / p.n) << ","
            << fmt(p.buf1 / p.n) << "," << fmt(p.buf2 / p.n) << "," << (p.drained_all ? 1 : 0) << "\n";
      }
    }
  }
  if (rc == kExitInterrupted) err << "interrupted: wrote " << written << " of " << jobs.size() << " trials\n";
  else if (rc != kExitOk) err << failure << "\n";
  return rc;
}

int cmd_verify(const CommonOpts& o, std::ostream& out) {
  Fault f = parse_fault(o.fault);
  auto results = run_verify(f, o.seed.value_or(1));
  print_report(out, results);
  return all_passed(results) ? kExitOk : kExitInvariant;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Opportunistic inter-session network coding: capacity, simulation and verification"};
  app.require_subcommand(1);
  CommonOpts o;
  std::uint64_t seed = 0;
  int trials = 0;

  auto add_common = [&](CLI::App* sub, bool needs_config) {
    auto* c = sub->add_option("--config", o.config, "experiment JSON");
    if (needs_config) c->required()->check(CLI::ExistingFile);
    sub->add_option("--out", o.out, "output CSV (default: config output, else stdout)");
    sub->add_option("--scheme", o.schemes, "scheme name, repeatable; overrides the config list");
  };
  auto* cap = app.add_subcommand("capacity", "LP boundary per scheme and direction");
  add_common(cap, true);
  auto* sweep = app.add_subcommand("sweep", "backlog-vs-theta simulation sweep");
  add_common(sweep, true);
  auto* seed_opt = sweep->add_option("--seed", seed, "base seed");
  auto* trials_opt = sweep->add_option("--trials", trials, "trials per point");
  sweep->add_option("--parallel", o.parallel, "worker threads")->check(CLI::PositiveNumber);
  sweep->add_option("--theta-grid", o.theta_grid, "a:b:step");
  auto* ver = app.add_subcommand("verify", "run the invariant suite");
  ver->add_option("--fault", o.fault, "inject a fault: table1 or bout");
  auto* vseed = ver->add_option("--seed", seed, "seed for randomized checks");
  ver->add_option("--config", o.config, "ignored; accepted for symmetry");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }
  if (seed_opt->count() || vseed->count()) o.seed = seed;
  if (trials_opt->count()) o.trials = trials;

  try {
    if (cap->parsed()) return cmd_capacity(o, out);
    if (sweep->parsed()) return cmd_sweep(o, out, err);
    if (ver->parsed()) return cmd_verify(o, out);
  } catch (const ConfigError& e) {
    err << e.what() << "\n";
    return kExitConfig;
  } catch (const SolverFailure& e) {
    err << "solver failure: " << e.what() << "\n";
    return kExitSolver;
  } catch (const InvariantViolation& e) {
    err << "invariant violation: " << e.what() << "\n";
    return kExitInvariant;
  } catch (const ProtocolViolation& e) {
    err << "protocol violation: " << e.what() << "\n";
    return kExitInvariant;
  } catch (const std::invalid_argument& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitConfig;
}

}  // namespace opnc
