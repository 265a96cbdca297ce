#pragma once

// The two commands behind the pamlr tool, callable without a process so they
// can be tested directly.
//
//   validate: report every problem of a config and print effective defaults.
//   run:      one Monte Carlo batch per sweep cell, one CSV per cell, plus
//             config.json (the effective config) and manifest.json.
//
// Output files are written to a temporary name and renamed into place. The
// manifest is written last; a run that stops early still writes one, with
// "complete": false.

#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include "pamlr/config.hpp"
#include "pamlr/env.hpp"
#include "pamlr/eval.hpp"

namespace pamlr {

enum class ExitCode : int { Ok = 0, ConfigError = 1, RuntimeError = 2, Truncated = 3 };

struct RunOptions {
  std::filesystem::path out_dir = "results";
  unsigned jobs = 1;
};

/// Writes `content` to `path` via a sibling temporary file and a rename.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write failed for '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

inline ExitCode cmd_validate(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const auto problems = validate_config(cfg);
  for (const auto& p : problems) err << "error: " << p << '\n';

  const json effective = to_json(cfg);
  out << "# effective configuration\n";
  for (const auto& k : config_keys()) {
    out << k.name << " = " << effective.at(k.name).dump() << "    # " << k.doc << '\n';
  }
  if (!cfg.sweep.empty()) {
    std::size_t cells = 1;
    for (const auto& axis : cfg.sweep) {
      out << "sweep." << axis.key << " = " << json(axis.values).dump() << '\n';
      cells *= axis.values.size();
    }
    out << "# " << cells << " sweep cell(s)\n";
  }
  if (problems.empty()) out << "# config is valid\n";
  return problems.empty() ? ExitCode::Ok : ExitCode::ConfigError;
}

namespace detail {

struct CellOutcome {
  std::string csv;
  bool truncated = false;
  std::vector<std::uint64_t> trial_seeds;
  std::vector<std::string> policies;
};

template <class Factory>
CellOutcome run_cell_with(const RunConfig& cfg, const RunOptions& opts, Factory&& make_env) {
  const PamlrParams p = engine_params(cfg);
  MonteCarloOptions mc = cfg.mc;
  mc.jobs = opts.jobs;

  std::vector<std::pair<std::string, Policy>> policies{{"pamlr", PamlrPolicy{}}};
  for (const auto& b : cfg.baselines) policies.emplace_back(b, *parse_policy(b));

  CellOutcome outcome;
  std::vector<std::pair<std::string, MonteCarloResult>> rows;
  for (const auto& [name, policy] : policies) {
    auto result = run_monte_carlo(policy, p, make_env, mc);
    outcome.truncated = outcome.truncated || result.any_truncated;
    if (outcome.trial_seeds.empty()) {
      for (const auto& t : result.trials) outcome.trial_seeds.push_back(t.seed);
    }
    outcome.policies.push_back(name);
    rows.emplace_back(name, std::move(result));
  }
  std::ostringstream os;
  write_results_csv(os, rows);
  outcome.csv = os.str();
  return outcome;
}

inline CellOutcome run_cell(const RunConfig& cfg, const RunOptions& opts) {
  const PamlrParams p = engine_params(cfg);
  if (cfg.mode == RunMode::Trace) {
    const auto full = load_trace(cfg.trace_path, cfg.trace_format);
    const auto env = full.subset(p.n_channels);
    return run_cell_with(cfg, opts, [&](std::uint64_t) { return EnvironmentRef<TraceEnvironment>(env); });
  }
  ScenarioSetup setup = cfg.scenario;
  setup.n_channels = p.n_channels;
  return run_cell_with(cfg, opts, [&](std::uint64_t seed) { return make_environment(setup, seed); });
}

}  // namespace detail

/// Runs every sweep cell of `cfg` into opts.out_dir. Progress and diagnostics
/// go to `log`.
inline ExitCode cmd_run(const RunConfig& cfg, const RunOptions& opts, std::ostream& log) {
  if (const auto problems = validate_config(cfg); !problems.empty()) {
    for (const auto& p : problems) log << "error: " << p << '\n';
    return ExitCode::ConfigError;
  }

  namespace fs = std::filesystem;
  json manifest = {{"complete", false},
                   {"truncated", false},
                   {"config_file", "config.json"},
                   {"config_hash", config_hash(cfg)},
                   {"master_seed", cfg.mc.master_seed},
                   {"trials", cfg.mc.trials},
                   {"cells", json::array()}};
  bool truncated = false;
  try {
    fs::create_directories(opts.out_dir);
    write_file_atomic(opts.out_dir / "config.json", to_json(cfg).dump(2) + "\n");

    const auto cells = expand_sweep(cfg);
    for (const auto& cell : cells) {
      log << cell.id << " " << cell.coordinates.dump() << " ..." << std::flush;
      const auto outcome = detail::run_cell(cell.config, opts);
      const std::string file = cell.id + ".csv";
      write_file_atomic(opts.out_dir / file, outcome.csv);
      truncated = truncated || outcome.truncated;
      manifest["cells"].push_back({{"id", cell.id},
                                   {"file", file},
                                   {"coordinates", cell.coordinates},
                                   {"config_hash", config_hash(cell.config)},
                                   {"policies", outcome.policies},
                                   {"truncated", outcome.truncated},
                                   {"trial_seeds", outcome.trial_seeds}});
      log << (outcome.truncated ? " done (truncated)\n" : " done\n");
    }
    manifest["complete"] = true;
    manifest["truncated"] = truncated;
    write_file_atomic(opts.out_dir / "manifest.json", manifest.dump(2) + "\n");
  } catch (const std::exception& e) {
    log << "\nerror: " << e.what() << '\n';
    manifest["error"] = e.what();
    try {
      write_file_atomic(opts.out_dir / "manifest.json", manifest.dump(2) + "\n");
    } catch (const std::exception&) {
    }
    return ExitCode::RuntimeError;
  }
  if (truncated) {
    log << "warning: the environment ended before the configured horizon; results are truncated\n";
    return ExitCode::Truncated;
  }
  return ExitCode::Ok;
}

}  // namespace pamlr
