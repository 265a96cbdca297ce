#pragma once

// Per-slot orchestration of passive exploration and active threshold refresh.
//
// Both measurement kinds are scheduled with deficit accumulators: every slot
// adds the current rate to the accumulator and each whole unit drained
// triggers one event. Over T slots the event count is therefore floor(rate*T)
// or ceil(rate*T). Active measurements are limited to one per slot and go
// round-robin over the current top-k list.
//
// The optional rate controller doubles a rate when its tracked statistic moved
// by more than a dead band since the last event and halves it otherwise:
//   lambda_a follows the EWMA of the mean SNR of the top-k channels,
//   lambda_p follows the EWMA fraction of explored channels below threshold.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "pamlr/belief.hpp"
#include "pamlr/core.hpp"
#include "pamlr/env.hpp"
#include "pamlr/explorer.hpp"
#include "pamlr/random.hpp"

namespace pamlr {

struct EngineState {
  BeliefTable beliefs;
  std::vector<ChannelId> top_k;
  std::size_t active_cursor = 0;
  double lambda_a_now = 0.0;
  double lambda_p_now = 0.0;
  double passive_accumulator = 0.0;
  double active_accumulator = 0.0;
  std::optional<double> snr_topk_ewma;
  std::optional<double> alpha_top2k_ewma;
  std::optional<double> beta_top2k_ewma;
  /// Latest received SNR per channel; feeds the top-k mean of the controller.
  std::vector<std::optional<double>> last_snr;
  bool seeded_done = false;
  TimeSlot t = 0;
};

struct ActiveEvent {
  ChannelId channel;
  bool received = false;
  std::optional<double> snr_db;
  /// Loss before any noise sample on the channel; belief left unchanged.
  bool skipped = false;
};

struct SlotDecision {
  std::uint32_t exploration_rounds = 0;
  std::uint32_t passive_samples = 0;
  std::optional<ActiveEvent> active;
  std::vector<ChannelId> selected;
};

namespace detail {

constexpr double kAccumulatorSlack = 1e-9;

inline bool same_set(std::vector<ChannelId> a, std::vector<ChannelId> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  return a == b;
}

/// A new top-k with the same members keeps the old order (and cursor), so
/// round-robin stays fair while only the ranking inside the set moves.
inline void adopt_top_k(EngineState& s, const std::vector<ChannelId>& fresh) {
  if (same_set(s.top_k, fresh)) return;
  s.top_k = fresh;
  s.active_cursor = 0;
}

inline double step_rate(double rate, bool up, const AdaptiveParams& a, const RateBounds& bounds) {
  return bounds.clamp(rate * (up ? a.step_up : a.step_down));
}

}  // namespace detail

inline EngineState init_engine(const PamlrParams& p, Rng& rng, const ScoreRule& rule = ThompsonRule{}) {
  EngineState s;
  s.beliefs = init_beliefs(p);
  draw_scores(s.beliefs, rule, rng);
  s.top_k = detail::best_by_score(s.beliefs, detail::all_channels(p.n_channels), p.k);
  s.lambda_a_now = p.lambda_a;
  s.lambda_p_now = p.lambda_p;
  if (p.adaptive) {
    s.lambda_a_now = p.adaptive->lambda_a_bounds.clamp(p.lambda_a);
    s.lambda_p_now = p.adaptive->lambda_p_bounds.clamp(p.lambda_p);
  }
  s.last_snr.assign(p.n_channels, std::nullopt);
  return s;
}

/// Feeds the mean SNR of the top-k channels into the lambda_a controller.
/// The first observation only seeds the EWMA.
inline void adapt_lambda_a(EngineState& s, double snr_topk_mean, const PamlrParams& p) {
  if (!p.adaptive) return;
  const auto& a = *p.adaptive;
  if (!s.snr_topk_ewma) {
    s.snr_topk_ewma = snr_topk_mean;
    return;
  }
  const double prev = *s.snr_topk_ewma;
  const double now = a.omega_hat * snr_topk_mean + (1.0 - a.omega_hat) * prev;
  s.snr_topk_ewma = now;
  s.lambda_a_now = detail::step_rate(s.lambda_a_now, std::abs(now - prev) > a.dead_band_snr_db, a, a.lambda_a_bounds);
}

/// Feeds one exploration round into the lambda_p controller. The tracked
/// statistic is the EWMA success rate alpha/(alpha+beta) of the 2k explored
/// channels, computed without Beta sampling so consecutive values compare
/// cleanly. The first round only seeds the EWMAs.
inline void adapt_lambda_p(EngineState& s, const ExplorationResult& r, const PamlrParams& p) {
  if (!p.adaptive) return;
  const auto& a = *p.adaptive;
  const double below = static_cast<double>(r.below_threshold_count);
  const double above = static_cast<double>(2 * p.k) - below;
  if (!s.alpha_top2k_ewma || !s.beta_top2k_ewma) {
    s.alpha_top2k_ewma = below;
    s.beta_top2k_ewma = above;
    return;
  }
  const double prev_theta = *s.alpha_top2k_ewma / (*s.alpha_top2k_ewma + *s.beta_top2k_ewma);
  s.alpha_top2k_ewma = a.omega_check * below + (1.0 - a.omega_check) * *s.alpha_top2k_ewma;
  s.beta_top2k_ewma = a.omega_check * above + (1.0 - a.omega_check) * *s.beta_top2k_ewma;
  const double theta = *s.alpha_top2k_ewma / (*s.alpha_top2k_ewma + *s.beta_top2k_ewma);
  s.lambda_p_now = detail::step_rate(s.lambda_p_now, std::abs(theta - prev_theta) > a.dead_band_rate, a, a.lambda_p_bounds);
}

/// Current EWMA success rate of the explored channels, if seeded.
inline std::optional<double> theta_top2k_ewma(const EngineState& s) {
  if (!s.alpha_top2k_ewma || !s.beta_top2k_ewma) return std::nullopt;
  return *s.alpha_top2k_ewma / (*s.alpha_top2k_ewma + *s.beta_top2k_ewma);
}

/// Advances the engine by one slot.
template <ChannelEnvironment Env>
SlotDecision step(EngineState& s, const Env& env, const PamlrParams& p, Rng& rng,
                  const ScoreRule& rule = ThompsonRule{}) {
  if (env.n_channels() < p.n_channels) throw ContractViolation("step: environment has fewer channels than N");
  if (s.t >= env.horizon()) throw ContractViolation("step: environment exhausted");

  SlotDecision d;
  const TimeSlot t = s.t;

  // Passive exploration.
  const double round_cost = p.lambda_p_unit == LambdaPUnit::Rounds ? 1.0 : static_cast<double>(2 * p.k);
  s.passive_accumulator += s.lambda_p_now;
  std::vector<PassiveSample> samples;
  while (s.passive_accumulator + detail::kAccumulatorSlack >= round_cost) {
    s.passive_accumulator = std::max(0.0, s.passive_accumulator - round_cost);
    const auto explored = select_exploration_set(s.beliefs, p.k);
    samples.clear();
    for (const auto c : explored) samples.push_back(env.sample_passive(c, t));
    const auto result = explore_round(s.beliefs, samples, p, rng, rule);
    detail::adopt_top_k(s, result.top_k);
    ++d.exploration_rounds;
    d.passive_samples += static_cast<std::uint32_t>(samples.size());
    adapt_lambda_p(s, result, p);
  }

  // Active threshold refresh, at most one per slot.
  s.active_accumulator += s.lambda_a_now;
  if (s.active_accumulator + detail::kAccumulatorSlack >= 1.0) {
    s.active_accumulator = std::clamp(s.active_accumulator - 1.0, 0.0, 1.0);
    const ChannelId ch = s.top_k[s.active_cursor % s.top_k.size()];
    s.active_cursor = (s.active_cursor + 1) % s.top_k.size();

    const ActiveOutcome outcome = env.sample_active(ch, t, p.sf);
    const auto upd = update_on_active(s.beliefs[ch.index()], outcome, p);
    s.beliefs[ch.index()] = upd.belief;
    d.active = ActiveEvent{ch, outcome.received, outcome.snr_db, upd.skipped};

    if (p.init.kind == InitKind::Seeded && !s.seeded_done && outcome.received) {
      const double threshold = s.beliefs[ch.index()].noise_threshold_dbm;
      for (std::size_t i = 0; i < s.beliefs.size(); ++i) {
        if (i != ch.index()) detail::assign_threshold(s.beliefs[i], threshold, p);
      }
      s.seeded_done = true;
    }

    if (outcome.received) {
      s.last_snr[ch.index()] = outcome.snr_db;
      double sum = 0.0;
      std::size_t known = 0;
      for (const auto c : s.top_k) {
        if (const auto& v = s.last_snr[c.index()]) {
          sum += *v;
          ++known;
        }
      }
      if (known > 0) adapt_lambda_a(s, sum / static_cast<double>(known), p);
    }
  }

  d.selected = s.top_k;
  ++s.t;
  return d;
}

// ---------------------------------------------------------------------------
// Trial log

struct SlotRecord {
  TimeSlot t = 0;
  std::uint32_t exploration_rounds = 0;
  std::uint32_t passive_samples = 0;
  std::optional<ActiveEvent> active;
  double lambda_a_now = 0.0;
  double lambda_p_now = 0.0;
};

/// Everything a trial did, slot by slot, plus the ground truth needed to
/// score it. Selections and SNR snapshots are stored flat (k and N per slot).
struct TrialLog {
  std::size_t n_channels = 0;
  std::size_t k = 0;
  bool truncated = false;
  std::vector<SlotRecord> slots;
  std::vector<ChannelId> selected;
  std::vector<double> truth;

  std::size_t size() const { return slots.size(); }
  std::span<const ChannelId> selected_at(std::size_t i) const { return {selected.data() + i * k, k}; }
  std::span<const double> truth_at(std::size_t i) const { return {truth.data() + i * n_channels, n_channels}; }

  void append(const SlotRecord& rec, std::span<const ChannelId> sel, std::span<const double> snr) {
    if (sel.size() != k || snr.size() != n_channels) throw ContractViolation("TrialLog::append: size mismatch");
    slots.push_back(rec);
    selected.insert(selected.end(), sel.begin(), sel.end());
    truth.insert(truth.end(), snr.begin(), snr.end());
  }
};

/// Runs the engine for `horizon` slots (fewer, with truncated set, if the
/// environment runs out first). Only the first params.n_channels channels of
/// env are used.
template <ChannelEnvironment Env>
TrialLog run_trial(const PamlrParams& p, const Env& env, std::uint64_t seed, TimeSlot horizon,
                   const ScoreRule& rule = ThompsonRule{}) {
  if (auto errs = validate_params(p); !errs.empty()) throw std::invalid_argument("run_trial: " + errs.front());
  Rng rng(seed);
  EngineState s = init_engine(p, rng, rule);

  TrialLog log;
  log.n_channels = p.n_channels;
  log.k = p.k;
  const TimeSlot usable = std::min<TimeSlot>(horizon, env.horizon());
  log.truncated = usable < horizon;
  log.slots.reserve(usable);
  log.selected.reserve(usable * p.k);
  log.truth.reserve(usable * p.n_channels);

  for (TimeSlot t = 0; t < usable; ++t) {
    const SlotDecision d = step(s, env, p, rng, rule);
    auto snr = env.ground_truth_snr(t);
    snr.resize(p.n_channels);
    log.append({t, d.exploration_rounds, d.passive_samples, d.active, s.lambda_a_now, s.lambda_p_now}, d.selected, snr);
  }
  return log;
}

}  // namespace pamlr
