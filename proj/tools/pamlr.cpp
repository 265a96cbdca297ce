// pamlr command-line tool.
//
//   pamlr validate --config run.json
//   pamlr run --config run.json --out results/ [--seed N] [--trials N] [--jobs N]
//
// PAMLR_JOBS sets the worker count when --jobs is absent.

#include <cstdlib>
#include <iostream>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "pamlr/cli.hpp"

namespace {

unsigned default_jobs() {
  if (const char* env = std::getenv("PAMLR_JOBS")) {
    const auto v = pamlr::detail::parse_uint(env);
    if (v && *v > 0) return static_cast<unsigned>(*v);
    std::cerr << "warning: ignoring PAMLR_JOBS='" << env << "'\n";
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Passive-active channel selection simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "results";
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> trials;
  std::optional<unsigned> jobs;

  auto* validate = app.add_subcommand("validate", "check a config and print its effective values");
  validate->add_option("--config", config_path, "config file (JSON)")->required();

  auto* run = app.add_subcommand("run", "run every sweep cell of a config");
  run->add_option("--config", config_path, "config file (JSON)")->required();
  run->add_option("--out", out_dir, "output directory")->capture_default_str();
  run->add_option("--seed", seed, "override master_seed");
  run->add_option("--trials", trials, "override trials");
  run->add_option("--jobs", jobs, "worker threads (default: PAMLR_JOBS or 1)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(pamlr::ExitCode::ConfigError);
  }

  pamlr::RunConfig cfg;
  try {
    cfg = pamlr::load_config(config_path);
  } catch (const pamlr::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(pamlr::ExitCode::ConfigError);
  }
  if (seed) cfg.mc.master_seed = *seed;
  if (trials) cfg.mc.trials = *trials;

  if (validate->parsed()) return static_cast<int>(pamlr::cmd_validate(cfg, std::cout, std::cerr));

  pamlr::RunOptions opts;
  opts.out_dir = out_dir;
  opts.jobs = jobs.value_or(default_jobs());
  if (opts.jobs == 0) opts.jobs = std::max(1u, std::thread::hardware_concurrency());
  return static_cast<int>(pamlr::cmd_run(cfg, opts, std::cerr));
}
