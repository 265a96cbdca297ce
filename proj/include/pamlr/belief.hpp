#pragma once

// Per-channel learning state and the noise-threshold update.
//
// Each channel keeps an EWMA of the RSSI seen by active measurements and an
// EWMA of the passive noise. The noise threshold is always
//
//     threshold = ewma_rssi - min_snr(SF)
//
// i.e. the largest noise level at which a packet with the current RSSI would
// still be demodulated. Passive noise samples at or below the threshold count
// as successes (alpha), samples above it as failures (beta); both counts are
// discounted by Omega so old evidence fades.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "pamlr/core.hpp"
#include "pamlr/random.hpp"

namespace pamlr {

struct ChannelBelief {
  double alpha = 1.0;
  double beta_count = 1.0;
  double ewma_rssi_dbm = 0.0;
  double ewma_noise_dbm = 0.0;
  double noise_threshold_dbm = 0.0;
  double last_theta = 0.5;
  bool ewma_noise_initialized = false;
  bool ewma_rssi_initialized = false;

  double mean_rate() const { return alpha / (alpha + beta_count); }
};

using BeliefTable = std::vector<ChannelBelief>;

namespace detail {

inline double ewma(double weight, double sample, double previous) {
  return weight * sample + (1.0 - weight) * previous;
}

inline double floored(double value, const PamlrParams& p) { return std::max(value, p.count_floor); }

/// Sets the threshold of b to `threshold` with the RSSI EWMA implied by it.
inline void assign_threshold(ChannelBelief& b, double threshold, const PamlrParams& p) {
  b.noise_threshold_dbm = threshold;
  b.ewma_rssi_dbm = threshold + p.min_snr_db();
  b.ewma_rssi_initialized = false;
}

}  // namespace detail

/// Fresh table for a trial. For the Seeded scheme, `seed_threshold` is the
/// threshold derived from the first successful active measurement; until it
/// exists the bootstrap level of InitScheme::seeded() is used.
///
/// Every channel starts from a uniform Beta(1,1) prior, and the RSSI EWMA is
/// set to the value the threshold implies but marked uninitialized, so the
/// first received RSSI replaces it outright.
inline BeliefTable init_beliefs(const PamlrParams& p, std::optional<double> seed_threshold = {}) {
  double level = p.init.level_dbm;
  if (p.init.kind == InitKind::Seeded) level = seed_threshold.value_or(InitScheme::kSeededBootstrapDbm);

  ChannelBelief proto;
  detail::assign_threshold(proto, level, p);
  return BeliefTable(p.n_channels, proto);
}

/// Copies `threshold` onto every channel's threshold without touching counts
/// or noise statistics (seeded initialization, after the first measurement).
inline void replicate_threshold(BeliefTable& table, double threshold, const PamlrParams& p) {
  for (auto& b : table) detail::assign_threshold(b, threshold, p);
}

struct ActiveUpdate {
  ChannelBelief belief;
  /// True when a loss arrived before any noise sample on the channel; the
  /// belief is returned unchanged in that case.
  bool skipped = false;
};

inline ActiveUpdate update_on_active(ChannelBelief b, const ActiveOutcome& outcome, const PamlrParams& p) {
  if (!outcome.consistent()) throw ContractViolation("update_on_active: inconsistent ActiveOutcome");
  const double w = p.ewma_weight;
  const double gmin = p.min_snr_db();

  if (outcome.received) {
    const double rssi = *outcome.rssi_dbm;
    b.ewma_rssi_dbm = b.ewma_rssi_initialized ? detail::ewma(w, rssi, b.ewma_rssi_dbm) : rssi;
  } else {
    if (!b.ewma_noise_initialized) return {b, true};
    // A lost pilot is treated as a signal just at the demodulation limit
    // above the current noise.
    b.ewma_rssi_dbm = detail::ewma(w, b.ewma_noise_dbm + gmin, b.ewma_rssi_dbm);
  }
  b.ewma_rssi_initialized = true;
  b.noise_threshold_dbm = b.ewma_rssi_dbm - gmin;
  return {b, false};
}

/// Noise EWMA update plus the alpha/beta count update against the current
/// threshold (noise == threshold counts as a success).
///
/// With symmetric_decay the count that is not incremented is also multiplied
/// by Omega, so both counts age on every touch; otherwise only the incremented
/// count is discounted.
inline ChannelBelief update_on_passive(ChannelBelief b, const PassiveSample& s, const PamlrParams& p) {
  b.ewma_noise_dbm = b.ewma_noise_initialized ? detail::ewma(p.ewma_weight, s.noise_dbm, b.ewma_noise_dbm)
                                              : s.noise_dbm;
  b.ewma_noise_initialized = true;

  const double om = p.discount;
  if (s.noise_dbm <= b.noise_threshold_dbm) {
    b.alpha = detail::floored(om * b.alpha + 1.0, p);
    if (p.symmetric_decay) b.beta_count = detail::floored(om * b.beta_count, p);
  } else {
    b.beta_count = detail::floored(om * b.beta_count + 1.0, p);
    if (p.symmetric_decay) b.alpha = detail::floored(om * b.alpha, p);
  }
  return b;
}

/// RSSI EWMA refresh from the noise EWMA (the same substitution used for a
/// lost pilot), followed by the threshold recomputation.
inline ChannelBelief refresh_rssi_from_noise(ChannelBelief b, const PamlrParams& p) {
  if (!b.ewma_noise_initialized) return b;
  const double gmin = p.min_snr_db();
  b.ewma_rssi_dbm = detail::ewma(p.ewma_weight, b.ewma_noise_dbm + gmin, b.ewma_rssi_dbm);
  b.ewma_rssi_initialized = true;
  b.noise_threshold_dbm = b.ewma_rssi_dbm - gmin;
  return b;
}

inline ChannelBelief decay(ChannelBelief b, double discount, double floor = 1e-6) {
  b.alpha = std::max(discount * b.alpha, floor);
  b.beta_count = std::max(discount * b.beta_count, floor);
  return b;
}

/// Thompson draw from Beta(alpha, beta_count); stored in last_theta.
inline double sample_theta(ChannelBelief& b, Rng& rng) {
  b.last_theta = beta_sample(b.alpha, b.beta_count, rng);
  return b.last_theta;
}

}  // namespace pamlr
