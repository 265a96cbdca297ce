#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "pamlr/config.hpp"

using namespace pamlr;

namespace {

RunConfig parse(const std::string& text) { return config_from_json(json::parse(text)); }

std::string message_of(const std::string& text) {
  try {
    parse(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

bool mentions(const std::vector<std::string>& msgs, const std::string& needle) {
  return std::any_of(msgs.begin(), msgs.end(), [&](const std::string& m) { return m.find(needle) != std::string::npos; });
}

}  // namespace

TEST(Config, EmptyObjectGivesDefaults) {
  const auto c = parse("{}");
  EXPECT_EQ(c.mode, RunMode::Scenario);
  EXPECT_EQ(c.scenario.kind, ScenarioKind::A);
  EXPECT_EQ(c.params.n_channels, 10u);
  EXPECT_EQ(c.params.k, 2u);
  EXPECT_EQ(c.params.lambda_a, 0.0625);
  EXPECT_EQ(c.params.lambda_p, 0.125);
  EXPECT_EQ(c.mc.trials, 500u);
  EXPECT_EQ(c.mc.horizon, 5000u);
  EXPECT_FALSE(engine_params(c).adaptive);
  EXPECT_TRUE(validate_config(c).empty());
}

TEST(Config, ParsesEveryKind) {
  const auto c = parse(R"({
    "scenario": "c", "n_channels": 8, "k": 3, "discount": 0.95, "lambda_p_unit": "samples",
    "sf": 10, "init_scheme": "optimistic:-120", "regret_window": 100, "adaptive": true,
    "adaptive_step_up": 1.5, "horizon": 700, "trials": 3, "master_seed": 99,
    "baselines": ["oracle", "fixed_k:0,1,2"], "c_level_hi_db": 20, "jitter_db": 0
  })");
  EXPECT_EQ(c.scenario.kind, ScenarioKind::C);
  EXPECT_EQ(c.params.k, 3u);
  EXPECT_EQ(c.params.lambda_p_unit, LambdaPUnit::Samples);
  EXPECT_EQ(c.params.sf, SpreadingFactor::SF10);
  EXPECT_EQ(c.params.init.kind, InitKind::Optimistic);
  EXPECT_EQ(c.params.init.level_dbm, -120.0);
  EXPECT_EQ(*c.params.regret_window, 100u);
  EXPECT_EQ(c.mc.horizon, 700u);
  EXPECT_EQ(c.scenario.horizon, 700u);
  EXPECT_EQ(c.scenario.c_ranges.level_hi_db, 20.0);
  const auto p = engine_params(c);
  ASSERT_TRUE(p.adaptive);
  EXPECT_EQ(p.adaptive->step_up, 1.5);
  EXPECT_TRUE(validate_config(c).empty());
}

TEST(Config, UnknownKeysAreErrors) {
  EXPECT_NE(message_of(R"({"lamda_a": 0.1})").find("lamda_a"), std::string::npos);
  EXPECT_NE(message_of(R"({"sweep": {"bogus": [1]}})").find("bogus"), std::string::npos);
}

TEST(Config, TypeAndValueErrorsNameTheKey) {
  for (const auto& [text, key] : std::vector<std::pair<std::string, std::string>>{
           {R"({"k": "two"})", "k"},
           {R"({"k": -1})", "k"},
           {R"({"sf": 13})", "sf"},
           {R"({"mode": "live"})", "mode"},
           {R"({"scenario": "z"})", "scenario"},
           {R"({"init_scheme": "hopeful"})", "init_scheme"},
           {R"({"regret_window": 0})", "regret_window"},
           {R"({"baselines": "oracle"})", "baselines"},
           {R"({"trace_format": "xml"})", "trace_format"},
           {R"({"sweep": {"mode": ["trace"]}})", "mode"},
           {R"({"sweep": {"k": []}})", "k"},
       }) {
    const auto msg = message_of(text);
    EXPECT_FALSE(msg.empty()) << text;
    EXPECT_NE(msg.find(key), std::string::npos) << text << " -> " << msg;
  }
  EXPECT_THROW(config_from_json(json::array()), ConfigError);
}

TEST(Config, ValidationListsEveryProblem) {
  const auto c = parse(R"({"n_channels": 4, "k": 3, "discount": 1.5, "trials": 0, "baselines": ["nope"]})");
  const auto errs = validate_config(c);
  EXPECT_TRUE(mentions(errs, "2k <= N"));
  EXPECT_TRUE(mentions(errs, "Omega"));
  EXPECT_TRUE(mentions(errs, "trials"));
  EXPECT_TRUE(mentions(errs, "nope"));
}

TEST(Config, TraceModeNeedsAPath) {
  auto c = parse(R"({"mode": "trace"})");
  EXPECT_TRUE(mentions(validate_config(c), "trace_path"));
  c = parse(R"({"mode": "trace", "trace_path": "/nonexistent/x.csv"})");
  EXPECT_TRUE(mentions(validate_config(c), "/nonexistent/x.csv"));
}

TEST(Config, CustomScenarioRoundTrip) {
  const auto c = parse(R"({
    "scenario": "custom", "n_channels": 2, "k": 1,
    "scenario_spec": {
      "jitter_db": 0.5, "reception_inclusive": false,
      "channels": [
        {"noise_base_dbm": -110, "signal_base_dbm": -100},
        {"noise_base_dbm": -110, "signal_base_dbm": -95,
         "interference": {"type": "on_off", "level_db": 12, "p_on": 0.3, "mean_dwell": 40},
         "fading": {"type": "lognormal_shadow", "sigma_db": 4, "coherence_slots": 25}}
      ]
    }
  })");
  ASSERT_EQ(c.scenario.custom.channels.size(), 2u);
  EXPECT_EQ(c.scenario.custom.measurement.jitter_db, 0.5);
  EXPECT_FALSE(c.scenario.custom.measurement.reception_inclusive);
  const auto& oo = std::get<OnOffInterference>(c.scenario.custom.channels[1].interference);
  EXPECT_EQ(oo.level_db, 12.0);
  EXPECT_EQ(oo.mean_dwell, 40.0);
  EXPECT_EQ(std::get<LogNormalShadow>(c.scenario.custom.channels[1].fading).coherence_slots, 25.0);
  EXPECT_TRUE(validate_config(c).empty());

  const auto back = config_from_json(to_json(c));
  EXPECT_EQ(to_json(back), to_json(c));
}

TEST(Config, CustomScenarioProblems) {
  EXPECT_TRUE(mentions(validate_config(parse(R"({"scenario": "custom"})")), "scenario_spec"));
  const auto c = parse(R"({"scenario": "custom", "scenario_spec": {"channels": [{}, {}]}})");
  EXPECT_TRUE(mentions(validate_config(c), "fewer than N=10"));
  EXPECT_FALSE(message_of(R"({"scenario": "custom", "scenario_spec": {"channels": [{"fading": {"type": "rayleigh"}}]}})").empty());
}

TEST(Config, EffectiveConfigRoundTripsExactly) {
  const auto c = parse(R"({"scenario": "b", "lambda_a": 0.1, "ewma_weight": 0.7, "adaptive": true,
                           "sweep": {"lambda_p": [0.125, 0.25], "init_scheme": ["seeded", "pessimistic:-80"]}})");
  const json j = to_json(c);
  for (const auto& k : config_keys()) EXPECT_TRUE(j.contains(k.name)) << k.name;
  const auto back = config_from_json(json::parse(j.dump()));
  EXPECT_EQ(to_json(back).dump(), j.dump());
  EXPECT_EQ(config_hash(back), config_hash(c));
}

TEST(Config, HashIsStableAndSensitive) {
  const auto a = parse(R"({"lambda_a": 0.1})");
  const auto b = parse(R"({"lambda_a": 0.1})");
  const auto c = parse(R"({"lambda_a": 0.2})");
  EXPECT_EQ(config_hash(a), config_hash(b));
  EXPECT_NE(config_hash(a), config_hash(c));
  EXPECT_EQ(config_hash(a).size(), 16u);
  // FNV-1a reference vectors
  EXPECT_EQ(fnv1a_hex(""), "cbf29ce484222325");
  EXPECT_EQ(fnv1a_hex("a"), "af63dc4c8601ec8c");
}

TEST(Sweep, CartesianProductLastAxisFastest) {
  const auto c = parse(R"({"sweep": {"lambda_a": [0.25, 0.5], "lambda_p": [1, 2, 4]}})");
  const auto cells = expand_sweep(c);
  ASSERT_EQ(cells.size(), 6u);
  EXPECT_EQ(cells[0].id, "cell_000");
  EXPECT_EQ(cells[5].id, "cell_005");
  EXPECT_EQ(cells[1].config.params.lambda_a, 0.25);
  EXPECT_EQ(cells[1].config.params.lambda_p, 2.0);
  EXPECT_EQ(cells[3].config.params.lambda_a, 0.5);
  EXPECT_EQ(cells[3].config.params.lambda_p, 1.0);
  EXPECT_EQ(cells[4].coordinates, (json{{"lambda_a", 0.5}, {"lambda_p", 2}}));
  for (const auto& cell : cells) EXPECT_TRUE(cell.config.sweep.empty());
}

TEST(Sweep, NoAxesIsOneCell) {
  const auto cells = expand_sweep(parse("{}"));
  ASSERT_EQ(cells.size(), 1u);
  EXPECT_EQ(cells[0].coordinates, json::object());
}

TEST(Sweep, BadValuesReportedWithCoordinates) {
  const auto c = parse(R"({"sweep": {"k": [2, 6]}})");
  const auto errs = validate_config(c);
  ASSERT_EQ(errs.size(), 1u);
  EXPECT_NE(errs[0].find("2k <= N"), std::string::npos);
  EXPECT_NE(errs[0].find("\"k\":6"), std::string::npos);
  // a value of the wrong type is caught when cells are expanded
  EXPECT_FALSE(validate_config(parse(R"({"sweep": {"k": ["x"]}})")).empty());
}

TEST(Policies, ParseNames) {
  EXPECT_TRUE(std::holds_alternative<OraclePolicy>(*parse_policy("oracle")));
  EXPECT_TRUE(std::holds_alternative<RandomKPolicy>(*parse_policy("random_k")));
  EXPECT_EQ(std::get<FixedKPolicy>(*parse_policy("fixed_k:3,1")).channels, (std::vector<ChannelId>{ChannelId{3}, ChannelId{1}}));
  EXPECT_EQ(std::get<EpsGreedyPolicy>(*parse_policy("eps_greedy:0.2")).epsilon, 0.2);
  EXPECT_EQ(std::get<UcbPolicy>(*parse_policy("ucb")).c, 1.0);
  for (const char* bad : {"", "oracle:1", "fixed_k", "fixed_k:a", "ucb:x", "thompson"}) EXPECT_FALSE(parse_policy(bad)) << bad;
}

TEST(LoadConfig, CommentsAllowedAndErrorsNameTheFile) {
  const auto dir = std::filesystem::temp_directory_path() / "pamlr_config_test";
  std::filesystem::create_directories(dir);
  const auto good = (dir / "good.json").string();
  std::ofstream(good) << "{\n  // a comment\n  \"k\": 1\n}\n";
  EXPECT_EQ(load_config(good).params.k, 1u);

  const auto bad = (dir / "bad.json").string();
  std::ofstream(bad) << "{\"k\": }";
  try {
    load_config(bad);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("bad.json"), std::string::npos);
  }
  EXPECT_THROW(load_config((dir / "missing.json").string()), ConfigError);
  std::filesystem::remove_all(dir);
}

TEST(Configs, ShippedExamplesAreValid) {
  std::size_t seen = 0;
  for (const auto& entry : std::filesystem::directory_iterator(PAMLR_CONFIG_DIR)) {
    if (entry.path().extension() != ".json") continue;
    ++seen;
    // trace paths in shipped configs are relative to the repository root
    const auto prev = std::filesystem::current_path();
    std::filesystem::current_path(std::filesystem::path(PAMLR_CONFIG_DIR).parent_path());
    const auto c = load_config(entry.path().string());
    EXPECT_TRUE(validate_config(c).empty()) << entry.path();
    std::filesystem::current_path(prev);
  }
  EXPECT_GT(seen, 0u);
}
