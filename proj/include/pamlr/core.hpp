#pragma once

// Domain types shared by every PAMLR module: channel ids, spreading factors,
// measurement records and the parameter set with its validation.
//
// Units: every power is in dBm, every SNR in dB, carried as plain doubles.

#include <array>
#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace pamlr {

/// Raised when a caller breaks an operation's precondition (wrong sample set,
/// non-positive Beta shapes, ...). Configuration problems are reported as data
/// by validate_params instead.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct ChannelId {
  std::uint32_t value = 0;

  constexpr ChannelId() = default;
  constexpr explicit ChannelId(std::size_t v) : value(static_cast<std::uint32_t>(v)) {}

  constexpr std::size_t index() const { return value; }
  friend constexpr auto operator<=>(ChannelId, ChannelId) = default;
};

/// Communication-cycle index.
using TimeSlot = std::uint64_t;

enum class SpreadingFactor : int {
  SF6 = 6,
  SF7 = 7,
  SF8 = 8,
  SF9 = 9,
  SF10 = 10,
  SF11 = 11,
  SF12 = 12,
};

inline std::optional<SpreadingFactor> spreading_factor_from_int(int sf) {
  if (sf < 6 || sf > 12) return std::nullopt;
  return static_cast<SpreadingFactor>(sf);
}

/// Minimum demodulation SNR (dB) of an SX127x-class LoRa receiver per SF.
constexpr double min_snr_for_sf(SpreadingFactor sf) {
  constexpr std::array<double, 7> table{-5.0, -7.5, -10.0, -12.5, -15.0, -17.5, -20.0};
  return table[static_cast<std::size_t>(static_cast<int>(sf) - 6)];
}

/// One passive listen: the background noise on a channel.
struct PassiveSample {
  ChannelId channel;
  TimeSlot t = 0;
  double noise_dbm = 0.0;
};

/// One pilot transmission. rssi/snr are present iff the packet was received.
struct ActiveOutcome {
  ChannelId channel;
  TimeSlot t = 0;
  bool received = false;
  std::optional<double> rssi_dbm;
  std::optional<double> snr_db;

  static ActiveOutcome success(ChannelId c, TimeSlot t, double rssi, double snr) {
    return ActiveOutcome{c, t, true, rssi, snr};
  }
  static ActiveOutcome loss(ChannelId c, TimeSlot t) {
    return ActiveOutcome{c, t, false, std::nullopt, std::nullopt};
  }

  bool consistent() const {
    return received ? (rssi_dbm.has_value() && snr_db.has_value())
                    : (!rssi_dbm.has_value() && !snr_db.has_value());
  }
};

enum class InitKind { Pessimistic, Optimistic, Seeded };

/// Initial noise-threshold scheme. level_dbm is ignored for Seeded.
struct InitScheme {
  InitKind kind = InitKind::Pessimistic;
  double level_dbm = -80.0;

  static constexpr double kSeededBootstrapDbm = -80.0;

  static InitScheme pessimistic(double level = -80.0) { return {InitKind::Pessimistic, level}; }
  static InitScheme optimistic(double level = -120.0) { return {InitKind::Optimistic, level}; }
  static InitScheme seeded() { return {InitKind::Seeded, kSeededBootstrapDbm}; }

  std::string to_string() const {
    std::ostringstream os;
    switch (kind) {
      case InitKind::Pessimistic: os << "pessimistic:" << level_dbm; break;
      case InitKind::Optimistic: os << "optimistic:" << level_dbm; break;
      case InitKind::Seeded: os << "seeded"; break;
    }
    return os.str();
  }
};

/// Parses "pessimistic[:level]", "optimistic[:level]" or "seeded".
inline std::optional<InitScheme> parse_init_scheme(const std::string& text) {
  const auto colon = text.find(':');
  const std::string name = text.substr(0, colon);
  std::optional<double> level;
  if (colon != std::string::npos) {
    try {
      std::size_t used = 0;
      const std::string rest = text.substr(colon + 1);
      level = std::stod(rest, &used);
      if (used != rest.size()) return std::nullopt;
    } catch (const std::exception&) {
      return std::nullopt;
    }
  }
  if (name == "pessimistic") return InitScheme::pessimistic(level.value_or(-80.0));
  if (name == "optimistic") return InitScheme::optimistic(level.value_or(-120.0));
  if (name == "seeded" && !level) return InitScheme::seeded();
  return std::nullopt;
}

struct RateBounds {
  double min = 1.0 / 64.0;
  double max = 4.0;

  double clamp(double v) const { return v < min ? min : (v > max ? max : v); }
};

/// Constants of the online rate controller.
struct AdaptiveParams {
  double omega_hat = 0.5;    // EWMA weight of the top-k mean SNR
  double omega_check = 0.5;  // EWMA weight of the below/above-threshold counts
  double step_up = 2.0;
  double step_down = 0.5;
  RateBounds lambda_a_bounds{};
  RateBounds lambda_p_bounds{};
  double dead_band_snr_db = 0.5;
  double dead_band_rate = 0.05;
};

/// Whether lambda_p counts exploration rounds or individual passive samples.
enum class LambdaPUnit { Rounds, Samples };

struct PamlrParams {
  std::size_t n_channels = 10;
  std::size_t k = 2;
  double discount = 0.99;     // Omega
  double ewma_weight = 0.9;   // omega
  double lambda_a = 0.0625;   // active measurements per slot
  double lambda_p = 0.125;    // exploration rounds (or samples) per slot
  LambdaPUnit lambda_p_unit = LambdaPUnit::Rounds;
  SpreadingFactor sf = SpreadingFactor::SF8;
  InitScheme init = InitScheme::pessimistic();
  std::optional<AdaptiveParams> adaptive;
  /// Regret window W in slots; nullopt means the full horizon.
  std::optional<std::size_t> regret_window;

  /// Discount the count that is not incremented as well (see belief.hpp).
  bool symmetric_decay = true;
  /// Refresh the RSSI EWMA from the noise EWMA on every explored channel.
  bool explore_rssi_refresh = false;
  /// Lower clamp on alpha/beta so Beta shapes stay positive under long decay.
  double count_floor = 1e-6;

  double min_snr_db() const { return min_snr_for_sf(sf); }
};

/// Every violated invariant of p, as human-readable strings. Empty means valid.
inline std::vector<std::string> validate_params(const PamlrParams& p) {
  std::vector<std::string> out;
  auto in_unit_interval = [](double x) { return std::isfinite(x) && x > 0.0 && x <= 1.0; };

  if (p.n_channels < 2) out.emplace_back("N >= 2 (got N=" + std::to_string(p.n_channels) + ")");
  if (p.k < 1) out.emplace_back("k >= 1 (got k=0)");
  if (2 * p.k > p.n_channels)
    out.emplace_back("2k <= N (got 2k=" + std::to_string(2 * p.k) +
                     ", N=" + std::to_string(p.n_channels) + ")");
  if (!in_unit_interval(p.discount)) out.emplace_back("discount Omega in (0,1]");
  if (!in_unit_interval(p.ewma_weight)) out.emplace_back("ewma_weight omega in (0,1]");
  if (!(std::isfinite(p.lambda_a) && p.lambda_a >= 0.0)) out.emplace_back("lambda_a >= 0");
  if (!(std::isfinite(p.lambda_p) && p.lambda_p > 0.0)) out.emplace_back("lambda_p > 0");
  if (!(p.count_floor > 0.0)) out.emplace_back("count_floor > 0");
  if (p.init.kind != InitKind::Seeded && !std::isfinite(p.init.level_dbm))
    out.emplace_back("init level must be finite");
  if (p.regret_window && *p.regret_window == 0) out.emplace_back("regret_window W >= 1");

  if (p.adaptive) {
    const auto& a = *p.adaptive;
    if (!in_unit_interval(a.omega_hat)) out.emplace_back("adaptive.omega_hat in (0,1]");
    if (!in_unit_interval(a.omega_check)) out.emplace_back("adaptive.omega_check in (0,1]");
    if (!(a.step_up > 1.0)) out.emplace_back("adaptive.step_up > 1");
    if (!(a.step_down > 0.0 && a.step_down < 1.0)) out.emplace_back("adaptive.step_down in (0,1)");
    if (!(a.lambda_a_bounds.min > 0.0 && a.lambda_a_bounds.min <= a.lambda_a_bounds.max))
      out.emplace_back("adaptive.lambda_a bounds: 0 < min <= max");
    if (!(a.lambda_p_bounds.min > 0.0 && a.lambda_p_bounds.min <= a.lambda_p_bounds.max))
      out.emplace_back("adaptive.lambda_p bounds: 0 < min <= max");
    if (!(a.dead_band_snr_db >= 0.0)) out.emplace_back("adaptive.dead_band_snr_db >= 0");
    if (!(a.dead_band_rate >= 0.0)) out.emplace_back("adaptive.dead_band_rate >= 0");
  }
  return out;
}

}  // namespace pamlr
