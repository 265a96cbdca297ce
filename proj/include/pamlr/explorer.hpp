#pragma once

// Channel exploration round: pick the 2k most promising channels, listen on
// them, update their counts, age every other channel, redraw a score for all
// N channels and report the k best among the explored ones.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <variant>
#include <vector>

#include "pamlr/belief.hpp"
#include "pamlr/core.hpp"
#include "pamlr/random.hpp"

namespace pamlr {

/// How per-channel scores are produced at the end of a round.
struct ThompsonRule {};
/// Posterior mean alpha/(alpha+beta); with probability epsilon the whole
/// round uses uniform random scores instead.
struct EpsGreedyRule {
  double epsilon = 0.1;
};
/// Posterior mean plus c*sqrt(ln(sum n)/n_i), n_i = alpha+beta.
struct UcbRule {
  double c = 1.0;
};
using ScoreRule = std::variant<ThompsonRule, EpsGreedyRule, UcbRule>;

struct ExplorationResult {
  std::vector<ChannelId> explored;  // ascending channel index
  std::vector<ChannelId> top_k;     // descending score
  std::size_t below_threshold_count = 0;
};

namespace detail {

/// The `count` channels with the largest last_theta, in descending order;
/// ties go to the lower channel index.
inline std::vector<ChannelId> best_by_score(const BeliefTable& beliefs, std::span<const ChannelId> pool,
                                            std::size_t count) {
  std::vector<ChannelId> order(pool.begin(), pool.end());
  const auto n = std::min(count, order.size());
  // strict total order, so partial_sort is deterministic
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n), order.end(),
                    [&](ChannelId a, ChannelId b) {
                      const double ta = beliefs[a.index()].last_theta;
                      const double tb = beliefs[b.index()].last_theta;
                      if (ta != tb) return ta > tb;
                      return a < b;
                    });
  order.resize(n);
  return order;
}

inline std::vector<ChannelId> all_channels(std::size_t n) {
  std::vector<ChannelId> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = ChannelId{i};
  return ids;
}

}  // namespace detail

/// Redraws last_theta for every channel according to `rule`.
inline void draw_scores(BeliefTable& beliefs, const ScoreRule& rule, Rng& rng) {
  if (std::holds_alternative<ThompsonRule>(rule)) {
    for (auto& b : beliefs) sample_theta(b, rng);
  } else if (const auto* eg = std::get_if<EpsGreedyRule>(&rule)) {
    const bool explore = bernoulli(rng, eg->epsilon);
    for (auto& b : beliefs) b.last_theta = explore ? uniform01(rng) : b.mean_rate();
  } else {
    const double c = std::get<UcbRule>(rule).c;
    double total = 0.0;
    for (const auto& b : beliefs) total += b.alpha + b.beta_count;
    const double log_total = std::log(std::max(total, 1.0 + 1e-12));
    for (auto& b : beliefs) {
      const double n = b.alpha + b.beta_count;
      b.last_theta = b.mean_rate() + c * std::sqrt(log_total / n);
    }
  }
}

/// The 2k channels with the largest current scores, ascending by index.
inline std::vector<ChannelId> select_exploration_set(const BeliefTable& beliefs, std::size_t k) {
  if (2 * k > beliefs.size()) throw ContractViolation("select_exploration_set: 2k > N");
  const auto all = detail::all_channels(beliefs.size());
  auto chosen = detail::best_by_score(beliefs, all, 2 * k);
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

/// One exploration round. `samples` must hold exactly one noise reading per
/// channel of select_exploration_set(beliefs, k), in any order.
inline ExplorationResult explore_round(BeliefTable& beliefs, std::span<const PassiveSample> samples,
                                       const PamlrParams& p, Rng& rng, const ScoreRule& rule = ThompsonRule{}) {
  ExplorationResult result;
  result.explored = select_exploration_set(beliefs, p.k);

  std::vector<ChannelId> sampled;
  sampled.reserve(samples.size());
  for (const auto& s : samples) sampled.push_back(s.channel);
  std::sort(sampled.begin(), sampled.end());
  if (sampled != result.explored) {
    throw ContractViolation("explore_round: passive samples do not match the exploration set");
  }

  std::vector<bool> touched(beliefs.size(), false);
  for (const auto& s : samples) {
    auto& b = beliefs[s.channel.index()];
    // The comparison uses the threshold from before this round's refresh.
    if (s.noise_dbm <= b.noise_threshold_dbm) ++result.below_threshold_count;
    b = update_on_passive(b, s, p);
    if (p.explore_rssi_refresh) b = refresh_rssi_from_noise(b, p);
    touched[s.channel.index()] = true;
  }
  for (std::size_t i = 0; i < beliefs.size(); ++i) {
    if (!touched[i]) beliefs[i] = decay(beliefs[i], p.discount, p.count_floor);
  }

  draw_scores(beliefs, rule, rng);
  result.top_k = detail::best_by_score(beliefs, result.explored, p.k);
  return result;
}

}  // namespace pamlr
