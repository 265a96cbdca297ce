#pragma once

// Scoring of trial logs (SNR regret, measurement energy), baseline policies
// sharing the engine's per-slot interface, and the Monte Carlo harness.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "pamlr/core.hpp"
#include "pamlr/engine.hpp"
#include "pamlr/env.hpp"
#include "pamlr/explorer.hpp"
#include "pamlr/random.hpp"

namespace pamlr {

// ---------------------------------------------------------------------------
// Regret

struct RegretSeries {
  /// nullopt: every checkpoint averages from the first slot.
  std::optional<std::size_t> window;
  /// values[i] is R_SNR at checkpoint T = i + 1.
  std::vector<double> values;
};

namespace detail {

/// Sum of the k largest values, added in ascending channel order.
inline double best_k_sum(std::span<const double> snr, std::size_t k) {
  std::vector<std::size_t> idx(snr.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return snr[a] > snr[b]; });
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  double sum = 0.0;
  for (const auto i : idx) sum += snr[i];
  return sum;
}

inline double chosen_sum(std::span<const double> snr, std::span<const ChannelId> chosen) {
  std::vector<ChannelId> ids(chosen.begin(), chosen.end());
  std::sort(ids.begin(), ids.end());
  double sum = 0.0;
  for (const auto c : ids) sum += snr[c.index()];
  return sum;
}

}  // namespace detail

/// Optimal-minus-chosen SNR sum for every slot of the log.
inline std::vector<double> slot_gaps(const TrialLog& log) {
  std::vector<double> gaps(log.size());
  for (std::size_t i = 0; i < log.size(); ++i) {
    const auto snr = log.truth_at(i);
    gaps[i] = detail::best_k_sum(snr, log.k) - detail::chosen_sum(snr, log.selected_at(i));
  }
  return gaps;
}

/// Windowed SNR regret at every slot. Checkpoints shorter than the window
/// average over all slots so far. Window sums are accumulated oldest slot
/// first.
inline RegretSeries regret(const TrialLog& log, std::optional<std::size_t> window = std::nullopt) {
  const auto gaps = slot_gaps(log);
  RegretSeries out{window, std::vector<double>(gaps.size())};
  double prefix = 0.0;
  for (std::size_t i = 0; i < gaps.size(); ++i) {
    prefix += gaps[i];
    const std::size_t T = i + 1;
    if (!window || T <= *window) {
      out.values[i] = prefix / static_cast<double>(T);
    } else {
      double sum = 0.0;
      for (std::size_t j = T - *window; j < T; ++j) sum += gaps[j];
      out.values[i] = sum / static_cast<double>(*window);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Energy

struct EnergyModel {
  double e_active = 23.89;  // per active measurement
  double e_passive = 0.023;  // per passive sample
};

struct EnergyReport {
  std::uint64_t passive_samples = 0;
  std::uint64_t active_measurements = 0;
  std::uint64_t exploration_rounds = 0;
  double total = 0.0;
  /// E, average energy per slot.
  double per_slot = 0.0;
  double observed_lambda_p = 0.0;  // passive samples per slot
  double observed_lambda_a = 0.0;  // active measurements per slot
  double observed_round_rate = 0.0;  // exploration rounds per slot
};

/// Counts individual measurements, regardless of the engine's lambda_p unit.
inline EnergyReport energy(const TrialLog& log, const EnergyModel& model = {}, std::optional<std::size_t> upto = {}) {
  EnergyReport r;
  const std::size_t T = std::min(upto.value_or(log.size()), log.size());
  for (std::size_t i = 0; i < T; ++i) {
    const auto& s = log.slots[i];
    r.passive_samples += s.passive_samples;
    r.exploration_rounds += s.exploration_rounds;
    if (s.active) ++r.active_measurements;
  }
  r.total = static_cast<double>(r.passive_samples) * model.e_passive +
            static_cast<double>(r.active_measurements) * model.e_active;
  if (T > 0) {
    const double dT = static_cast<double>(T);
    r.per_slot = r.total / dT;
    r.observed_lambda_p = static_cast<double>(r.passive_samples) / dT;
    r.observed_lambda_a = static_cast<double>(r.active_measurements) / dT;
    r.observed_round_rate = static_cast<double>(r.exploration_rounds) / dT;
  }
  return r;
}

// ---------------------------------------------------------------------------
// Policies

struct PamlrPolicy {};
/// Reads ground truth and picks the true best k every slot.
struct OraclePolicy {};
/// k distinct channels uniformly at random every slot, no measurements.
struct RandomKPolicy {};
struct FixedKPolicy {
  std::vector<ChannelId> channels;
};
/// The engine with posterior means instead of Thompson draws.
struct EpsGreedyPolicy {
  double epsilon = 0.1;
};
struct UcbPolicy {
  double c = 1.0;
};
using Policy = std::variant<PamlrPolicy, OraclePolicy, RandomKPolicy, FixedKPolicy, EpsGreedyPolicy, UcbPolicy>;

inline std::string policy_name(const Policy& policy) {
  struct Visitor {
    std::string operator()(const PamlrPolicy&) const { return "pamlr"; }
    std::string operator()(const OraclePolicy&) const { return "oracle"; }
    std::string operator()(const RandomKPolicy&) const { return "random_k"; }
    std::string operator()(const FixedKPolicy& f) const {
      std::string s = "fixed_k";
      for (auto c : f.channels) s += "_" + std::to_string(c.index());
      return s;
    }
    std::string operator()(const EpsGreedyPolicy& e) const { return "eps_greedy_" + detail::format_double(e.epsilon); }
    std::string operator()(const UcbPolicy& u) const { return "ucb_" + detail::format_double(u.c); }
  };
  return std::visit(Visitor{}, policy);
}

/// Configuration problems of a policy under params; empty when usable.
inline std::vector<std::string> validate_policy(const Policy& policy, const PamlrParams& p) {
  std::vector<std::string> out;
  if (const auto* f = std::get_if<FixedKPolicy>(&policy)) {
    if (f->channels.size() != p.k) out.emplace_back("fixed_k: needs exactly k channels");
    for (const auto c : f->channels) {
      if (c.index() >= p.n_channels) out.emplace_back("fixed_k: channel " + std::to_string(c.index()) + " out of range");
    }
    auto sorted = f->channels;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) out.emplace_back("fixed_k: duplicate channel");
  }
  if (const auto* e = std::get_if<EpsGreedyPolicy>(&policy)) {
    if (!(e->epsilon >= 0.0 && e->epsilon <= 1.0)) out.emplace_back("eps_greedy: epsilon in [0,1]");
  }
  if (const auto* u = std::get_if<UcbPolicy>(&policy)) {
    if (!(u->c >= 0.0)) out.emplace_back("ucb: c >= 0");
  }
  return out;
}

namespace detail {

template <ChannelEnvironment Env, class Choose>
TrialLog run_static_policy(const PamlrParams& p, const Env& env, TimeSlot horizon, Choose&& choose) {
  TrialLog log;
  log.n_channels = p.n_channels;
  log.k = p.k;
  const TimeSlot usable = std::min<TimeSlot>(horizon, env.horizon());
  log.truncated = usable < horizon;
  for (TimeSlot t = 0; t < usable; ++t) {
    auto snr = env.ground_truth_snr(t);
    snr.resize(p.n_channels);
    const std::vector<ChannelId> sel = choose(std::span<const double>(snr));
    log.append({t, 0, 0, std::nullopt, 0.0, 0.0}, sel, snr);
  }
  return log;
}

}  // namespace detail

template <ChannelEnvironment Env>
TrialLog run_policy_trial(const Policy& policy, const PamlrParams& p, const Env& env, std::uint64_t seed,
                          TimeSlot horizon) {
  if (auto errs = validate_policy(policy, p); !errs.empty()) throw std::invalid_argument(errs.front());
  if (std::holds_alternative<PamlrPolicy>(policy)) return run_trial(p, env, seed, horizon, ThompsonRule{});
  if (const auto* e = std::get_if<EpsGreedyPolicy>(&policy)) return run_trial(p, env, seed, horizon, EpsGreedyRule{e->epsilon});
  if (const auto* u = std::get_if<UcbPolicy>(&policy)) return run_trial(p, env, seed, horizon, UcbRule{u->c});

  if (std::holds_alternative<OraclePolicy>(policy)) {
    return detail::run_static_policy(p, env, horizon, [&](std::span<const double> snr) {
      std::vector<ChannelId> ids = detail::all_channels(snr.size());
      std::stable_sort(ids.begin(), ids.end(), [&](ChannelId a, ChannelId b) { return snr[a.index()] > snr[b.index()]; });
      ids.resize(p.k);
      return ids;
    });
  }
  if (std::holds_alternative<RandomKPolicy>(policy)) {
    Rng rng(seed);
    return detail::run_static_policy(p, env, horizon, [&](std::span<const double> snr) {
      std::vector<ChannelId> ids = detail::all_channels(snr.size());
      for (std::size_t i = 0; i < p.k; ++i) std::swap(ids[i], ids[i + uniform_index(rng, ids.size() - i)]);
      ids.resize(p.k);
      return ids;
    });
  }
  const auto& fixed = std::get<FixedKPolicy>(policy).channels;
  return detail::run_static_policy(p, env, horizon, [&](std::span<const double>) { return fixed; });
}

// ---------------------------------------------------------------------------
// Monte Carlo

struct MonteCarloOptions {
  std::size_t trials = 500;
  std::uint64_t master_seed = 1;
  TimeSlot horizon = 5000;
  std::size_t checkpoint_every = 1;
  unsigned jobs = 1;
  EnergyModel energy{};
};

/// What a single trial contributes besides its curves.
struct TrialSummary {
  std::uint64_t seed = 0;
  bool truncated = false;
  TimeSlot slots = 0;
  std::vector<ChannelId> final_selected;
  EnergyReport energy;
};

struct MonteCarloResult {
  std::vector<TimeSlot> checkpoints;  // T values, 1-based
  std::vector<double> regret_mean, regret_std;
  std::vector<double> energy_mean, energy_std;  // E(T) per slot
  std::vector<TrialSummary> trials;
  bool any_truncated = false;
};

/// Checkpoint T values matching run_monte_carlo's decimation for a run of
/// `length` slots.
inline std::vector<TimeSlot> checkpoint_slots(TimeSlot length, std::size_t every) {
  std::vector<TimeSlot> out;
  for (TimeSlot s = 0; s < length; ++s) {
    if ((s + 1) % every == 0 || s + 1 == length) out.push_back(s + 1);
  }
  return out;
}

class TrialFailure : public std::runtime_error {
 public:
  TrialFailure(std::uint64_t seed, const std::string& what)
      : std::runtime_error("trial with seed " + std::to_string(seed) + " failed: " + what), seed_(seed) {}
  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
};

/// Seed of trial i under master seed m, and the environment/algorithm
/// sub-streams derived from it. Environments realized from the same trial
/// seed are identical whatever the policy or parameters.
inline std::uint64_t trial_seed(std::uint64_t master, std::size_t i) { return derive_seed(master, i); }
inline std::uint64_t env_seed(std::uint64_t trial) { return derive_seed(trial, 0); }
inline std::uint64_t algo_seed(std::uint64_t trial) { return derive_seed(trial, 1); }

/// Runs `opts.trials` independent trials and aggregates pointwise mean and
/// population standard deviation of regret and energy per slot. `make_env`
/// maps an environment seed to a ChannelEnvironment. Aggregation runs in trial
/// order, so the result does not depend on `jobs`.
template <class EnvFactory>
MonteCarloResult run_monte_carlo(const Policy& policy, const PamlrParams& p, EnvFactory&& make_env,
                                 const MonteCarloOptions& opts) {
  if (opts.trials == 0) throw std::invalid_argument("run_monte_carlo: trials >= 1");
  if (opts.checkpoint_every == 0) throw std::invalid_argument("run_monte_carlo: checkpoint_every >= 1");

  struct PerTrial {
    std::vector<double> regret, energy;
    TrialSummary summary;
  };
  std::vector<PerTrial> results(opts.trials);
  std::atomic<std::size_t> next{0};
  std::mutex failure_mutex;
  std::optional<TrialFailure> failure;

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= opts.trials) return;
      const std::uint64_t seed = trial_seed(opts.master_seed, i);
      try {
        const auto env = make_env(env_seed(seed));
        const TrialLog log = run_policy_trial(policy, p, env, algo_seed(seed), opts.horizon);
        const auto series = regret(log, p.regret_window);
        PerTrial& out = results[i];
        double cumulative = 0.0;
        for (std::size_t s = 0; s < log.size(); ++s) {
          const auto& rec = log.slots[s];
          cumulative += static_cast<double>(rec.passive_samples) * opts.energy.e_passive +
                        (rec.active ? opts.energy.e_active : 0.0);
          if ((s + 1) % opts.checkpoint_every == 0 || s + 1 == log.size()) {
            out.regret.push_back(series.values[s]);
            out.energy.push_back(cumulative / static_cast<double>(s + 1));
          }
        }
        out.summary.seed = seed;
        out.summary.truncated = log.truncated;
        out.summary.slots = log.size();
        if (log.size() > 0) {
          const auto last = log.selected_at(log.size() - 1);
          out.summary.final_selected.assign(last.begin(), last.end());
        }
        out.summary.energy = energy(log, opts.energy);
      } catch (const std::exception& e) {
        std::lock_guard lock(failure_mutex);
        if (!failure || failure->seed() > seed) failure.emplace(seed, e.what());
        next.store(opts.trials);
        return;
      }
    }
  };

  const unsigned jobs = std::max(1u, std::min<unsigned>(opts.jobs, static_cast<unsigned>(opts.trials)));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) throw *failure;

  MonteCarloResult mc;
  TimeSlot length = results.front().summary.slots;
  for (const auto& r : results) {
    length = std::min(length, r.summary.slots);
    mc.any_truncated = mc.any_truncated || r.summary.truncated;
  }
  mc.checkpoints = checkpoint_slots(length, opts.checkpoint_every);
  const std::size_t points = mc.checkpoints.size();
  const auto n = static_cast<double>(opts.trials);
  for (std::size_t c = 0; c < points; ++c) {
    double rs = 0.0, rq = 0.0, es = 0.0, eq = 0.0;
    for (const auto& r : results) {
      rs += r.regret[c];
      rq += r.regret[c] * r.regret[c];
      es += r.energy[c];
      eq += r.energy[c] * r.energy[c];
    }
    const double rm = rs / n, em = es / n;
    mc.regret_mean.push_back(rm);
    mc.regret_std.push_back(std::sqrt(std::max(0.0, rq / n - rm * rm)));
    mc.energy_mean.push_back(em);
    mc.energy_std.push_back(std::sqrt(std::max(0.0, eq / n - em * em)));
  }
  mc.trials.reserve(results.size());
  for (auto& r : results) mc.trials.push_back(std::move(r.summary));
  return mc;
}

/// One row per (policy, checkpoint).
inline void write_results_csv(std::ostream& os, const std::vector<std::pair<std::string, MonteCarloResult>>& rows) {
  os << "policy,t,regret_mean,regret_std,energy_mean,energy_std\n";
  for (const auto& [name, mc] : rows) {
    for (std::size_t i = 0; i < mc.regret_mean.size(); ++i) {
      os << name << ',' << mc.checkpoints[i] << ',' << detail::format_double(mc.regret_mean[i]) << ','
         << detail::format_double(mc.regret_std[i]) << ',' << detail::format_double(mc.energy_mean[i]) << ','
         << detail::format_double(mc.energy_std[i]) << '\n';
    }
  }
}

}  // namespace pamlr
