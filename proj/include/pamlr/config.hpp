#pragma once

// Run configuration.
//
// A config file is one JSON object with flat keys (see config_keys() for the
// full list and their meaning). Any scalar key may also appear under "sweep"
// with an array of values; a run then covers the Cartesian product of all
// sweep axes, one Monte Carlo batch per cell.
//
//   {
//     "scenario": "c",
//     "lambda_a": 0.0625, "lambda_p": 0.125,
//     "sweep": { "init_scheme": ["pessimistic:-80", "optimistic:-120", "seeded"] }
//   }

#include <cstdint>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "pamlr/core.hpp"
#include "pamlr/env.hpp"
#include "pamlr/eval.hpp"

namespace pamlr {

using json = nlohmann::json;

enum class RunMode { Scenario, Trace };

struct SweepAxis {
  std::string key;
  std::vector<json> values;
};

struct RunConfig {
  RunMode mode = RunMode::Scenario;
  ScenarioSetup scenario;
  std::string trace_path;
  TraceFormat trace_format = TraceFormat::Raw;
  /// Engine parameters; params.adaptive is filled from the two fields below by
  /// engine_params().
  PamlrParams params;
  bool adaptive = false;
  AdaptiveParams adaptive_params;
  MonteCarloOptions mc;
  /// Extra policies run on the same trial seeds, e.g. "oracle", "random_k",
  /// "fixed_k:0,1", "eps_greedy:0.1", "ucb:1".
  std::vector<std::string> baselines;
  std::vector<SweepAxis> sweep;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Scenario spec <-> JSON

inline json to_json(const InterferenceProcess& p) {
  if (const auto* o = std::get_if<OnOffInterference>(&p))
    return {{"type", "on_off"}, {"level_db", o->level_db}, {"p_on", o->p_on}, {"mean_dwell", o->mean_dwell}};
  if (const auto* g = std::get_if<GaussianWalk>(&p))
    return {{"type", "gaussian_walk"}, {"sigma_db", g->sigma_db}, {"lo", g->lo}, {"hi", g->hi}};
  return {{"type", "none"}};
}

inline json to_json(const FadingProcess& p) {
  if (const auto* s = std::get_if<LogNormalShadow>(&p))
    return {{"type", "lognormal_shadow"}, {"sigma_db", s->sigma_db}, {"coherence_slots", s->coherence_slots}};
  if (const auto* g = std::get_if<GaussianWalk>(&p))
    return {{"type", "gaussian_walk"}, {"sigma_db", g->sigma_db}, {"lo", g->lo}, {"hi", g->hi}};
  return {{"type", "none"}};
}

inline json to_json(const ScenarioSpec& spec) {
  json channels = json::array();
  for (const auto& c : spec.channels) {
    channels.push_back({{"noise_base_dbm", c.noise_base_dbm},
                        {"signal_base_dbm", c.signal_base_dbm},
                        {"interference", to_json(c.interference)},
                        {"fading", to_json(c.fading)}});
  }
  return {{"name", spec.name},
          {"jitter_db", spec.measurement.jitter_db},
          {"reception_inclusive", spec.measurement.reception_inclusive},
          {"channels", channels}};
}

namespace detail {

inline GaussianWalk walk_from_json(const json& j) {
  GaussianWalk g;
  g.sigma_db = j.value("sigma_db", g.sigma_db);
  g.lo = j.value("lo", g.lo);
  g.hi = j.value("hi", g.hi);
  return g;
}

}  // namespace detail

/// Throws ConfigError on an unknown process type or a malformed field.
inline ScenarioSpec scenario_spec_from_json(const json& j) {
  try {
    ScenarioSpec spec;
    spec.name = j.value("name", std::string("custom"));
    spec.measurement.jitter_db = j.value("jitter_db", spec.measurement.jitter_db);
    spec.measurement.reception_inclusive = j.value("reception_inclusive", spec.measurement.reception_inclusive);
    for (const auto& c : j.at("channels")) {
      ChannelModel m;
      m.noise_base_dbm = c.value("noise_base_dbm", m.noise_base_dbm);
      m.signal_base_dbm = c.value("signal_base_dbm", m.signal_base_dbm);
      if (c.contains("interference")) {
        const auto& i = c.at("interference");
        const auto type = i.value("type", std::string("none"));
        if (type == "on_off") {
          OnOffInterference o;
          o.level_db = i.value("level_db", o.level_db);
          o.p_on = i.value("p_on", o.p_on);
          o.mean_dwell = i.value("mean_dwell", o.mean_dwell);
          m.interference = o;
        } else if (type == "gaussian_walk") {
          m.interference = detail::walk_from_json(i);
        } else if (type != "none") {
          throw ConfigError("scenario_spec: unknown interference type '" + type + "'");
        }
      }
      if (c.contains("fading")) {
        const auto& f = c.at("fading");
        const auto type = f.value("type", std::string("none"));
        if (type == "lognormal_shadow") {
          LogNormalShadow s;
          s.sigma_db = f.value("sigma_db", s.sigma_db);
          s.coherence_slots = f.value("coherence_slots", s.coherence_slots);
          m.fading = s;
        } else if (type == "gaussian_walk") {
          m.fading = detail::walk_from_json(f);
        } else if (type != "none") {
          throw ConfigError("scenario_spec: unknown fading type '" + type + "'");
        }
      }
      spec.channels.push_back(m);
    }
    return spec;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("scenario_spec: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Policies by name

/// "pamlr", "oracle", "random_k", "fixed_k:<c>,<c>...", "eps_greedy[:eps]",
/// "ucb[:c]".
inline std::optional<Policy> parse_policy(const std::string& text) {
  const auto colon = text.find(':');
  const std::string name = text.substr(0, colon);
  const std::optional<std::string> arg =
      colon == std::string::npos ? std::nullopt : std::optional<std::string>(text.substr(colon + 1));
  auto number = [&]() -> std::optional<double> { return arg ? detail::parse_double(*arg) : std::nullopt; };

  if (name == "pamlr" && !arg) return PamlrPolicy{};
  if (name == "oracle" && !arg) return OraclePolicy{};
  if (name == "random_k" && !arg) return RandomKPolicy{};
  if (name == "eps_greedy") {
    if (!arg) return EpsGreedyPolicy{};
    if (auto v = number()) return EpsGreedyPolicy{*v};
    return std::nullopt;
  }
  if (name == "ucb") {
    if (!arg) return UcbPolicy{};
    if (auto v = number()) return UcbPolicy{*v};
    return std::nullopt;
  }
  if (name == "fixed_k" && arg) {
    FixedKPolicy f;
    for (const auto part : detail::split_csv(*arg)) {
      const auto v = detail::parse_uint(part);
      if (!v) return std::nullopt;
      f.channels.emplace_back(*v);
    }
    return f;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Key table

struct ConfigKey {
  std::string name;
  std::string doc;
  std::function<json(const RunConfig&)> get;
  /// Throws ConfigError (or json::exception) on a bad value.
  std::function<void(RunConfig&, const json&)> set;
};

namespace detail {

template <class T>
T expect(const json& v, const std::string& key) {
  if constexpr (std::is_same_v<T, bool>) {
    if (!v.is_boolean()) throw ConfigError(key + ": expected true or false");
  } else if constexpr (std::is_integral_v<T>) {
    if (!v.is_number_integer()) throw ConfigError(key + ": expected an integer");
    if (std::is_unsigned_v<T> && !v.is_number_unsigned() && v.get<std::int64_t>() < 0)
      throw ConfigError(key + ": expected a non-negative integer");
  } else if constexpr (std::is_floating_point_v<T>) {
    if (!v.is_number()) throw ConfigError(key + ": expected a number");
  } else {
    if (!v.is_string()) throw ConfigError(key + ": expected a string");
  }
  return v.get<T>();
}

/// Key bound to one field; `ref` is a generic lambda returning a reference.
template <class T, class Ref>
ConfigKey field(const std::string& name, std::string doc, Ref ref) {
  return {name, std::move(doc), [ref](const RunConfig& c) { return json(ref(c)); },
          [ref, name](RunConfig& c, const json& v) { ref(c) = expect<T>(v, name); }};
}

inline std::string trace_format_name(TraceFormat f) { return f == TraceFormat::Raw ? "raw" : "aggregate"; }

}  // namespace detail

#define PAMLR_REF(expr) [](auto& c) -> auto& { return expr; }

/// Every accepted key, in the order cmd_validate prints them.
inline const std::vector<ConfigKey>& config_keys() {
  using detail::expect;
  using detail::field;
  static const std::vector<ConfigKey> keys = [] {
    std::vector<ConfigKey> k;
    k.push_back({"mode", "\"scenario\" (synthetic world) or \"trace\" (replay a recorded trace)",
                 [](const RunConfig& c) { return json(c.mode == RunMode::Scenario ? "scenario" : "trace"); },
                 [](RunConfig& c, const json& v) {
                   const auto s = expect<std::string>(v, "mode");
                   if (s == "scenario") c.mode = RunMode::Scenario;
                   else if (s == "trace") c.mode = RunMode::Trace;
                   else throw ConfigError("mode: expected \"scenario\" or \"trace\", got \"" + s + "\"");
                 }});
    k.push_back({"scenario", "a (interference diversity), b (fading diversity), c (both) or custom",
                 [](const RunConfig& c) { return json(to_string(c.scenario.kind)); },
                 [](RunConfig& c, const json& v) {
                   const auto s = expect<std::string>(v, "scenario");
                   const auto kind = parse_scenario_kind(s);
                   if (!kind) throw ConfigError("scenario: expected a, b, c or custom, got \"" + s + "\"");
                   c.scenario.kind = *kind;
                 }});
    k.push_back({"scenario_spec", "per-channel models for scenario \"custom\" (object, see README)",
                 [](const RunConfig& c) {
                   return c.scenario.kind == ScenarioKind::Custom ? to_json(c.scenario.custom) : json(nullptr);
                 },
                 [](RunConfig& c, const json& v) {
                   if (v.is_null()) return;
                   if (!v.is_object()) throw ConfigError("scenario_spec: expected an object");
                   c.scenario.custom = scenario_spec_from_json(v);
                 }});
    k.push_back(field<double>("c_signal_lo_dbm", "scenario c: lowest signal base", PAMLR_REF(c.scenario.c_ranges.signal_lo_dbm)));
    k.push_back(field<double>("c_signal_hi_dbm", "scenario c: highest signal base", PAMLR_REF(c.scenario.c_ranges.signal_hi_dbm)));
    k.push_back(field<double>("c_level_lo_db", "scenario c: lowest interference level", PAMLR_REF(c.scenario.c_ranges.level_lo_db)));
    k.push_back(field<double>("c_level_hi_db", "scenario c: highest interference level", PAMLR_REF(c.scenario.c_ranges.level_hi_db)));
    k.push_back(field<double>("c_p_on_lo", "scenario c: lowest interference duty", PAMLR_REF(c.scenario.c_ranges.p_on_lo)));
    k.push_back(field<double>("c_p_on_hi", "scenario c: highest interference duty", PAMLR_REF(c.scenario.c_ranges.p_on_hi)));
    k.push_back(field<double>("c_dwell_lo", "scenario c: shortest mean dwell (slots)", PAMLR_REF(c.scenario.c_ranges.dwell_lo)));
    k.push_back(field<double>("c_dwell_hi", "scenario c: longest mean dwell (slots)", PAMLR_REF(c.scenario.c_ranges.dwell_hi)));
    k.push_back(field<double>("c_fade_sigma_lo_db", "scenario c: smallest shadowing sigma", PAMLR_REF(c.scenario.c_ranges.fade_sigma_lo_db)));
    k.push_back(field<double>("c_fade_sigma_hi_db", "scenario c: largest shadowing sigma", PAMLR_REF(c.scenario.c_ranges.fade_sigma_hi_db)));
    k.push_back(field<double>("c_coherence_lo", "scenario c: shortest shadowing coherence (slots)", PAMLR_REF(c.scenario.c_ranges.coherence_lo)));
    k.push_back(field<double>("c_coherence_hi", "scenario c: longest shadowing coherence (slots)", PAMLR_REF(c.scenario.c_ranges.coherence_hi)));
    k.push_back(field<double>("jitter_db", "std dev of noise measurement error (0 = exact)", PAMLR_REF(c.scenario.measurement.jitter_db)));
    k.push_back(field<bool>("reception_inclusive", "pilot received when snr >= min snr (false: strictly greater)",
                            PAMLR_REF(c.scenario.measurement.reception_inclusive)));
    k.push_back(field<std::string>("trace_path", "trace CSV for mode \"trace\"", PAMLR_REF(c.trace_path)));
    k.push_back({"trace_format", "\"raw\" (per-sample records) or \"aggregate\" (per-window percentiles)",
                 [](const RunConfig& c) { return json(detail::trace_format_name(c.trace_format)); },
                 [](RunConfig& c, const json& v) {
                   const auto s = expect<std::string>(v, "trace_format");
                   if (s == "raw") c.trace_format = TraceFormat::Raw;
                   else if (s == "aggregate") c.trace_format = TraceFormat::Aggregate;
                   else throw ConfigError("trace_format: expected \"raw\" or \"aggregate\", got \"" + s + "\"");
                 }});

    k.push_back(field<std::size_t>("n_channels", "N, channels considered", PAMLR_REF(c.params.n_channels)));
    k.push_back(field<std::size_t>("k", "channels selected per slot", PAMLR_REF(c.params.k)));
    k.push_back(field<double>("discount", "Omega, count discount per round", PAMLR_REF(c.params.discount)));
    k.push_back(field<double>("ewma_weight", "omega, weight of the newest sample in the RSSI/noise EWMAs",
                              PAMLR_REF(c.params.ewma_weight)));
    k.push_back(field<double>("lambda_a", "active measurements per slot", PAMLR_REF(c.params.lambda_a)));
    k.push_back(field<double>("lambda_p", "exploration rate per slot (unit: lambda_p_unit)", PAMLR_REF(c.params.lambda_p)));
    k.push_back({"lambda_p_unit", "\"rounds\" (2k samples each) or \"samples\"",
                 [](const RunConfig& c) { return json(c.params.lambda_p_unit == LambdaPUnit::Rounds ? "rounds" : "samples"); },
                 [](RunConfig& c, const json& v) {
                   const auto s = expect<std::string>(v, "lambda_p_unit");
                   if (s == "rounds") c.params.lambda_p_unit = LambdaPUnit::Rounds;
                   else if (s == "samples") c.params.lambda_p_unit = LambdaPUnit::Samples;
                   else throw ConfigError("lambda_p_unit: expected \"rounds\" or \"samples\", got \"" + s + "\"");
                 }});
    k.push_back({"sf", "spreading factor 6..12", [](const RunConfig& c) { return json(static_cast<int>(c.params.sf)); },
                 [](RunConfig& c, const json& v) {
                   const auto sf = spreading_factor_from_int(expect<int>(v, "sf"));
                   if (!sf) throw ConfigError("sf: expected 6..12");
                   c.params.sf = *sf;
                 }});
    k.push_back({"init_scheme", "\"pessimistic[:dBm]\", \"optimistic[:dBm]\" or \"seeded\"",
                 [](const RunConfig& c) { return json(c.params.init.to_string()); },
                 [](RunConfig& c, const json& v) {
                   const auto s = expect<std::string>(v, "init_scheme");
                   const auto init = parse_init_scheme(s);
                   if (!init) throw ConfigError("init_scheme: cannot parse \"" + s + "\"");
                   c.params.init = *init;
                 }});
    k.push_back({"regret_window", "W in slots, or null for the full horizon",
                 [](const RunConfig& c) { return c.params.regret_window ? json(*c.params.regret_window) : json(nullptr); },
                 [](RunConfig& c, const json& v) {
                   if (v.is_null()) {
                     c.params.regret_window.reset();
                     return;
                   }
                   const auto w = expect<std::size_t>(v, "regret_window");
                   if (w == 0) throw ConfigError("regret_window: expected a positive integer or null");
                   c.params.regret_window = w;
                 }});
    k.push_back(field<bool>("symmetric_decay", "age the count that is not incremented too", PAMLR_REF(c.params.symmetric_decay)));
    k.push_back(field<bool>("explore_rssi_refresh", "refresh the RSSI EWMA from the noise EWMA on every explored channel",
                            PAMLR_REF(c.params.explore_rssi_refresh)));
    k.push_back(field<double>("count_floor", "lower clamp on alpha and beta", PAMLR_REF(c.params.count_floor)));

    k.push_back(field<bool>("adaptive", "adapt lambda_a and lambda_p while running", PAMLR_REF(c.adaptive)));
    k.push_back(field<double>("adaptive_omega_hat", "EWMA weight of the top-k mean SNR", PAMLR_REF(c.adaptive_params.omega_hat)));
    k.push_back(field<double>("adaptive_omega_check", "EWMA weight of the explored success counts",
                              PAMLR_REF(c.adaptive_params.omega_check)));
    k.push_back(field<double>("adaptive_step_up", "rate multiplier when the statistic moved", PAMLR_REF(c.adaptive_params.step_up)));
    k.push_back(field<double>("adaptive_step_down", "rate multiplier when it did not", PAMLR_REF(c.adaptive_params.step_down)));
    k.push_back(field<double>("adaptive_dead_band_snr_db", "SNR change that counts as movement",
                              PAMLR_REF(c.adaptive_params.dead_band_snr_db)));
    k.push_back(field<double>("adaptive_dead_band_rate", "success-rate change that counts as movement",
                              PAMLR_REF(c.adaptive_params.dead_band_rate)));
    k.push_back(field<double>("adaptive_lambda_a_min", "lower bound of adapted lambda_a", PAMLR_REF(c.adaptive_params.lambda_a_bounds.min)));
    k.push_back(field<double>("adaptive_lambda_a_max", "upper bound of adapted lambda_a", PAMLR_REF(c.adaptive_params.lambda_a_bounds.max)));
    k.push_back(field<double>("adaptive_lambda_p_min", "lower bound of adapted lambda_p", PAMLR_REF(c.adaptive_params.lambda_p_bounds.min)));
    k.push_back(field<double>("adaptive_lambda_p_max", "upper bound of adapted lambda_p", PAMLR_REF(c.adaptive_params.lambda_p_bounds.max)));

    k.push_back({"horizon", "T, slots per trial", [](const RunConfig& c) { return json(c.mc.horizon); },
                 [](RunConfig& c, const json& v) {
                   c.mc.horizon = expect<TimeSlot>(v, "horizon");
                   c.scenario.horizon = c.mc.horizon;
                 }});
    k.push_back(field<std::size_t>("trials", "Monte Carlo trials per cell", PAMLR_REF(c.mc.trials)));
    k.push_back(field<std::uint64_t>("master_seed", "seed every trial seed is derived from", PAMLR_REF(c.mc.master_seed)));
    k.push_back(field<std::size_t>("checkpoint_every", "write one result row every this many slots",
                                   PAMLR_REF(c.mc.checkpoint_every)));
    k.push_back(field<double>("energy_active", "energy per active measurement", PAMLR_REF(c.mc.energy.e_active)));
    k.push_back(field<double>("energy_passive", "energy per passive sample", PAMLR_REF(c.mc.energy.e_passive)));
    k.push_back({"baselines", "extra policies: oracle, random_k, fixed_k:<c>,<c>, eps_greedy[:eps], ucb[:c]",
                 [](const RunConfig& c) { return json(c.baselines); },
                 [](RunConfig& c, const json& v) {
                   if (!v.is_array()) throw ConfigError("baselines: expected an array of strings");
                   std::vector<std::string> out;
                   for (const auto& e : v) out.push_back(expect<std::string>(e, "baselines"));
                   c.baselines = std::move(out);
                 }});
    return k;
  }();
  return keys;
}

#undef PAMLR_REF

inline const ConfigKey* find_key(const std::string& name) {
  for (const auto& k : config_keys()) {
    if (k.name == name) return &k;
  }
  return nullptr;
}

/// Sets one key; throws ConfigError with the key name on any problem.
inline void apply_key(RunConfig& c, const std::string& name, const json& value) {
  const auto* key = find_key(name);
  if (!key) throw ConfigError("unknown key \"" + name + "\"");
  try {
    key->set(c, value);
  } catch (const json::exception& e) {
    throw ConfigError(name + ": " + e.what());
  }
}

/// Keys that cannot be swept.
inline bool sweepable(const std::string& name) { return name != "mode" && name != "scenario_spec" && name != "baselines"; }

/// Builds a RunConfig from a parsed JSON object. Unknown keys are errors.
inline RunConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  RunConfig c;
  // scenario before scenario_spec/horizon so their order in the file does not matter
  for (const auto& k : config_keys()) {
    if (j.contains(k.name)) apply_key(c, k.name, j.at(k.name));
  }
  for (const auto& [name, value] : j.items()) {
    if (name == "sweep") continue;
    if (!find_key(name)) throw ConfigError("unknown key \"" + name + "\"");
  }
  if (j.contains("sweep")) {
    const auto& sw = j.at("sweep");
    if (!sw.is_object()) throw ConfigError("sweep: expected an object of key -> array of values");
    for (const auto& [name, values] : sw.items()) {
      if (!find_key(name)) throw ConfigError("sweep: unknown key \"" + name + "\"");
      if (!sweepable(name)) throw ConfigError("sweep: key \"" + name + "\" cannot be swept");
      if (!values.is_array() || values.empty()) throw ConfigError("sweep." + name + ": expected a non-empty array");
      c.sweep.push_back({name, std::vector<json>(values.begin(), values.end())});
    }
  }
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json j;
  try {
    j = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  try {
    return config_from_json(j);
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

/// Every key with its effective value, plus the sweep axes if any.
inline json to_json(const RunConfig& c) {
  json j = json::object();
  for (const auto& k : config_keys()) j[k.name] = k.get(c);
  if (!c.sweep.empty()) {
    json sw = json::object();
    for (const auto& axis : c.sweep) sw[axis.key] = axis.values;
    j["sweep"] = sw;
  }
  return j;
}

/// Engine parameters with the adaptive block resolved.
inline PamlrParams engine_params(const RunConfig& c) {
  PamlrParams p = c.params;
  p.adaptive = c.adaptive ? std::optional<AdaptiveParams>(c.adaptive_params) : std::nullopt;
  return p;
}

/// 64-bit FNV-1a, printed as 16 hex digits.
inline std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

inline std::string config_hash(const RunConfig& c) { return fnv1a_hex(to_json(c).dump()); }

// ---------------------------------------------------------------------------
// Sweep cells

struct SweepCell {
  std::size_t index = 0;
  std::string id;
  json coordinates = json::object();
  RunConfig config;  // sweep applied, sweep list cleared
};

/// Cartesian product of the sweep axes, last axis varying fastest. Without
/// axes there is exactly one cell.
inline std::vector<SweepCell> expand_sweep(const RunConfig& base) {
  std::size_t total = 1;
  for (const auto& axis : base.sweep) total *= axis.values.size();
  std::vector<SweepCell> cells;
  cells.reserve(total);
  for (std::size_t n = 0; n < total; ++n) {
    SweepCell cell;
    cell.index = n;
    std::ostringstream id;
    id << "cell_" << std::setw(3) << std::setfill('0') << n;
    cell.id = id.str();
    cell.config = base;
    cell.config.sweep.clear();
    std::size_t rem = n;
    std::vector<std::size_t> pick(base.sweep.size());
    for (std::size_t a = base.sweep.size(); a-- > 0;) {
      pick[a] = rem % base.sweep[a].values.size();
      rem /= base.sweep[a].values.size();
    }
    for (std::size_t a = 0; a < base.sweep.size(); ++a) {
      const auto& v = base.sweep[a].values[pick[a]];
      apply_key(cell.config, base.sweep[a].key, v);
      cell.coordinates[base.sweep[a].key] = v;
    }
    cells.push_back(std::move(cell));
  }
  return cells;
}

// ---------------------------------------------------------------------------
// Validation

/// Problems of a single (sweep-free) config. File checks touch the disk.
inline std::vector<std::string> validate_cell(const RunConfig& c) {
  std::vector<std::string> out;
  const PamlrParams p = engine_params(c);
  for (auto& e : validate_params(p)) out.push_back(std::move(e));
  if (c.mc.trials == 0) out.emplace_back("trials >= 1");
  if (c.mc.horizon == 0) out.emplace_back("horizon >= 1");
  if (c.mc.checkpoint_every == 0) out.emplace_back("checkpoint_every >= 1");
  if (!(c.mc.energy.e_active >= 0.0 && c.mc.energy.e_passive >= 0.0)) out.emplace_back("energy constants >= 0");
  for (const auto& b : c.baselines) {
    const auto policy = parse_policy(b);
    if (!policy) {
      out.push_back("baselines: cannot parse \"" + b + "\"");
      continue;
    }
    for (auto& e : validate_policy(*policy, p)) out.push_back("baselines: " + e);
  }

  if (c.mode == RunMode::Scenario) {
    if (c.scenario.kind == ScenarioKind::Custom) {
      if (c.scenario.custom.channels.empty()) out.emplace_back("scenario \"custom\" needs scenario_spec");
      for (auto& e : validate_scenario(c.scenario.custom)) out.push_back("scenario_spec: " + e);
      if (c.scenario.custom.channels.size() < p.n_channels)
        out.push_back("scenario_spec has " + std::to_string(c.scenario.custom.channels.size()) +
                      " channels, fewer than N=" + std::to_string(p.n_channels));
    } else {
      const auto& r = c.scenario.c_ranges;
      if (!(r.signal_lo_dbm <= r.signal_hi_dbm && r.level_lo_db <= r.level_hi_db && r.p_on_lo <= r.p_on_hi &&
            r.dwell_lo <= r.dwell_hi && r.fade_sigma_lo_db <= r.fade_sigma_hi_db && r.coherence_lo <= r.coherence_hi))
        out.emplace_back("scenario c ranges: every lo must be <= its hi");
      if (!(r.p_on_lo >= 0.0 && r.p_on_hi <= 1.0)) out.emplace_back("scenario c ranges: p_on within [0,1]");
      if (!(r.dwell_lo >= 1.0)) out.emplace_back("scenario c ranges: dwell >= 1");
      if (!(r.coherence_lo >= 1.0)) out.emplace_back("scenario c ranges: coherence >= 1");
      if (!(r.fade_sigma_lo_db >= 0.0)) out.emplace_back("scenario c ranges: fading sigma >= 0");
      if (!(c.scenario.measurement.jitter_db >= 0.0)) out.emplace_back("jitter_db >= 0");
    }
  } else {
    if (c.trace_path.empty()) {
      out.emplace_back("mode \"trace\" needs trace_path");
    } else {
      try {
        const auto env = load_trace(c.trace_path, c.trace_format);
        if (env.n_channels() < p.n_channels)
          out.push_back("trace '" + c.trace_path + "' has " + std::to_string(env.n_channels()) +
                        " channels, fewer than N=" + std::to_string(p.n_channels));
      } catch (const std::exception& e) {
        out.emplace_back(e.what());
      }
    }
  }
  return out;
}

/// Problems of every sweep cell, each prefixed with the cell coordinates when
/// there is a sweep. Duplicates across cells are reported once.
inline std::vector<std::string> validate_config(const RunConfig& c) {
  std::vector<std::string> out;
  std::vector<SweepCell> cells;
  try {
    cells = expand_sweep(c);
  } catch (const ConfigError& e) {
    return {e.what()};
  }
  for (const auto& cell : cells) {
    for (const auto& e : validate_cell(cell.config)) {
      const std::string msg = c.sweep.empty() ? e : e + " (at " + cell.coordinates.dump() + ")";
      if (std::find(out.begin(), out.end(), msg) == out.end()) out.push_back(msg);
    }
  }
  return out;
}

}  // namespace pamlr
