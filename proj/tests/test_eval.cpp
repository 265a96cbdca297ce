#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "pamlr/eval.hpp"
#include "test_util.hpp"

using namespace pamlr;
using pamlr::testing::ConstantWorld;

namespace {

TrialLog one_slot_log(std::vector<double> snr, std::vector<ChannelId> chosen) {
  TrialLog log;
  log.n_channels = snr.size();
  log.k = chosen.size();
  log.append({}, chosen, snr);
  return log;
}

void next_k_subset(std::vector<std::size_t>& idx, std::size_t n, bool& done) {
  std::size_t k = idx.size();
  std::size_t i = k;
  while (i > 0 && idx[i - 1] == n - k + i - 1) --i;
  if (i == 0) {
    done = true;
    return;
  }
  ++idx[i - 1];
  for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
}

// Exhaustive evaluator: best subset found by enumeration, sums in index order.
std::vector<double> brute_force_regret(const TrialLog& log) {
  std::vector<double> out;
  double prefix = 0.0;
  for (std::size_t i = 0; i < log.size(); ++i) {
    const auto snr = log.truth_at(i);
    std::vector<std::size_t> idx(log.k);
    for (std::size_t j = 0; j < log.k; ++j) idx[j] = j;
    double best = -INFINITY;
    for (bool done = false; !done; next_k_subset(idx, log.n_channels, done)) {
      double s = 0.0;
      for (auto j : idx) s += snr[j];
      best = std::max(best, s);
    }
    std::vector<ChannelId> chosen(log.selected_at(i).begin(), log.selected_at(i).end());
    std::sort(chosen.begin(), chosen.end());
    double c = 0.0;
    for (auto ch : chosen) c += snr[ch.index()];
    prefix += best - c;
    out.push_back(prefix / static_cast<double>(i + 1));
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------- regret

TEST(Regret, SingleSlotExample) {
  const auto r = regret(one_slot_log({10, 4}, {ChannelId{1}}));
  ASSERT_EQ(r.values.size(), 1u);
  EXPECT_EQ(r.values[0], 6.0);
}

TEST(Regret, ZeroWhenChoosingTheBest) {
  EXPECT_EQ(regret(one_slot_log({10, 4, 7}, {ChannelId{2}, ChannelId{0}})).values[0], 0.0);
}

TEST(Regret, TiesCostNothing) {
  EXPECT_EQ(regret(one_slot_log({5, 5, 1}, {ChannelId{1}})).values[0], 0.0);
}

TEST(Regret, ThreeChannelsEveryChoice) {
  const std::vector<double> snr{3, -2, 8};
  EXPECT_EQ(regret(one_slot_log(snr, {ChannelId{0}})).values[0], 5.0);
  EXPECT_EQ(regret(one_slot_log(snr, {ChannelId{1}})).values[0], 10.0);
  EXPECT_EQ(regret(one_slot_log(snr, {ChannelId{2}})).values[0], 0.0);
}

TEST(Regret, WindowAveragesTheLastWSlots) {
  TrialLog log;
  log.n_channels = 2;
  log.k = 1;
  const std::vector<double> gaps{4, 0, 2, 6, 1};
  for (double g : gaps) log.append({}, std::vector<ChannelId>{ChannelId{1}}, std::vector<double>{g, 0});
  const auto full = regret(log);
  EXPECT_EQ(full.values, (std::vector<double>{4, 2, 2, 3, 13.0 / 5}));
  const auto w2 = regret(log, 2);
  EXPECT_EQ(w2.values, (std::vector<double>{4, 2, 1, 4, 3.5}));
  EXPECT_EQ(*w2.window, 2u);
}

TEST(Regret, MatchesExhaustiveEvaluatorOnSmallWorlds) {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    Rng rng(seed);
    const std::size_t n = 2 + uniform_index(rng, 4);
    const std::size_t k = 1 + uniform_index(rng, std::min<std::size_t>(2, n / 2));
    auto spec = make_scenario_c(rng, n);
    spec.horizon = 50;
    const SyntheticEnvironment env(spec, seed);
    PamlrParams p;
    p.n_channels = n;
    p.k = k;
    const auto log = run_trial(p, env, seed, 50);
    const auto r = regret(log);
    EXPECT_EQ(r.values, brute_force_regret(log)) << "seed " << seed;
  }
}

// ---------------------------------------------------------------- energy

TEST(Energy, OneRoundPerSlotExample) {
  // 4 samples per slot plus one active every 32 slots
  TrialLog log;
  log.n_channels = 4;
  log.k = 2;
  const std::vector<double> snr(4, 0.0);
  const std::vector<ChannelId> sel{ChannelId{0}, ChannelId{1}};
  for (TimeSlot t = 0; t < 320; ++t) {
    SlotRecord r;
    r.t = t;
    r.exploration_rounds = 1;
    r.passive_samples = 4;
    if (t % 32 == 31) r.active = ActiveEvent{ChannelId{0}, true, 10.0, false};
    log.append(r, sel, snr);
  }
  const auto e = energy(log);
  EXPECT_NEAR(e.per_slot, 4 * 0.023 + 0.03125 * 23.89, 1e-12);
  EXPECT_EQ(e.observed_lambda_a, 0.03125);
  EXPECT_EQ(e.observed_lambda_p, 4.0);
  EXPECT_EQ(e.observed_round_rate, 1.0);
  EXPECT_EQ(e.active_measurements, 10u);
}

TEST(Energy, CostRatio) {
  const EnergyModel m;
  EXPECT_NEAR(m.e_active / m.e_passive, 1038.7, 0.05);
}

TEST(Energy, EmptyLogAndPrefix) {
  TrialLog log;
  log.n_channels = 2;
  log.k = 1;
  EXPECT_EQ(energy(log).per_slot, 0.0);
  SlotRecord r;
  r.passive_samples = 2;
  log.append(r, std::vector<ChannelId>{ChannelId{0}}, std::vector<double>{0, 0});
  r.passive_samples = 0;
  r.active = ActiveEvent{ChannelId{0}, false, std::nullopt, false};
  log.append(r, std::vector<ChannelId>{ChannelId{0}}, std::vector<double>{0, 0});
  EXPECT_NEAR(energy(log, {}, 1).total, 0.046, 1e-15);
  EXPECT_NEAR(energy(log).total, 0.046 + 23.89, 1e-12);
}

TEST(Energy, SamplesCountedWhateverTheRateUnit) {
  const auto world = pamlr::testing::two_good(6, 400);
  PamlrParams rounds;
  rounds.n_channels = 6;
  rounds.lambda_p = 0.5;
  PamlrParams samples = rounds;
  samples.lambda_p_unit = LambdaPUnit::Samples;
  samples.lambda_p = 0.5 * 2 * rounds.k;
  const auto a = energy(run_trial(rounds, world, 3, 400));
  const auto b = energy(run_trial(samples, world, 3, 400));
  EXPECT_EQ(a.passive_samples, b.passive_samples);
  EXPECT_EQ(a.passive_samples, 400u * 4 / 2);
}

TEST(Energy, LinearInBothRates) {
  Rng rng(1);
  auto spec = make_scenario_a(rng);
  spec.horizon = 2000;
  const SyntheticEnvironment env(spec, 5);
  PamlrParams p;
  p.lambda_a = 0.0625;
  p.lambda_p = 0.125;
  PamlrParams q = p;
  q.lambda_a *= 2;
  q.lambda_p *= 2;
  const double T = 2000;
  const auto e1 = energy(run_trial(p, env, 1, 2000));
  const auto e2 = energy(run_trial(q, env, 1, 2000));
  EXPECT_NEAR(e2.observed_lambda_a, 2 * e1.observed_lambda_a, 2 / T);
  EXPECT_NEAR(e2.observed_round_rate, 2 * e1.observed_round_rate, 2 / T);
}

// ---------------------------------------------------------------- policies

TEST(Policies, Names) {
  EXPECT_EQ(policy_name(PamlrPolicy{}), "pamlr");
  EXPECT_EQ(policy_name(OraclePolicy{}), "oracle");
  EXPECT_EQ(policy_name(FixedKPolicy{{ChannelId{8}, ChannelId{9}}}), "fixed_k_8_9");
}

TEST(Policies, Validation) {
  PamlrParams p;
  EXPECT_FALSE(validate_policy(FixedKPolicy{{ChannelId{1}}}, p).empty());
  EXPECT_FALSE(validate_policy(FixedKPolicy{{ChannelId{1}, ChannelId{1}}}, p).empty());
  EXPECT_FALSE(validate_policy(FixedKPolicy{{ChannelId{1}, ChannelId{10}}}, p).empty());
  EXPECT_FALSE(validate_policy(EpsGreedyPolicy{1.5}, p).empty());
  EXPECT_FALSE(validate_policy(UcbPolicy{-1}, p).empty());
  EXPECT_TRUE(validate_policy(FixedKPolicy{{ChannelId{1}, ChannelId{0}}}, p).empty());
  ConstantWorld w = pamlr::testing::two_good();
  EXPECT_THROW(run_policy_trial(FixedKPolicy{{ChannelId{1}}}, p, w, 1, 10), std::invalid_argument);
}

TEST(Policies, OracleHasZeroRegretAndDominates) {
  PamlrParams p;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Rng rng(seed);
    auto spec = make_scenario_c(rng);
    spec.horizon = 800;
    const SyntheticEnvironment env(spec, seed);
    const auto oracle = regret(run_policy_trial(OraclePolicy{}, p, env, seed, 800)).values;
    for (double v : oracle) ASSERT_EQ(v, 0.0);
    for (const Policy& other : std::vector<Policy>{PamlrPolicy{}, RandomKPolicy{}, EpsGreedyPolicy{}, UcbPolicy{},
                                                   FixedKPolicy{{ChannelId{0}, ChannelId{1}}}}) {
      const auto r = regret(run_policy_trial(other, p, env, seed, 800)).values;
      ASSERT_EQ(r.size(), oracle.size());
      for (std::size_t i = 0; i < r.size(); ++i) {
        ASSERT_GE(r[i], 0.0);
        ASSERT_LE(oracle[i], r[i]);
      }
    }
  }
}

TEST(Policies, FixedOnInterferedChannelsPaysTheConstructedGap) {
  // interference adds level*p_on on each chosen channel on average
  PamlrParams p;
  ScenarioSetup setup;
  MonteCarloOptions mc;
  mc.trials = 40;
  mc.horizon = 5000;
  mc.checkpoint_every = 5000;
  const auto r = run_monte_carlo(FixedKPolicy{{ChannelId{8}, ChannelId{9}}}, p,
                                 [&](std::uint64_t s) { return make_environment(setup, s); }, mc);
  const double expected = 2 * ScenarioDefaults::kInterferenceLevelDb * ScenarioDefaults::kInterferencePOn;
  EXPECT_NEAR(r.regret_mean.back(), expected, 1.5);
}

TEST(Policies, RandomKMatchesSubsetAverage) {
  ConstantWorld w;
  w.noise = {-110, -104, -100, -97, -92};
  w.signal = {-100, -100, -95, -99, -90};
  w.length = 40000;
  PamlrParams p;
  p.n_channels = 5;
  p.k = 2;
  // expected gap: best pair minus the mean over all 10 pairs
  const auto snr = w.ground_truth_snr(0);
  double total = 0.0;
  std::size_t pairs = 0;
  double best = -INFINITY;
  for (std::size_t a = 0; a < 5; ++a) {
    for (std::size_t b = a + 1; b < 5; ++b) {
      total += snr[a] + snr[b];
      best = std::max(best, snr[a] + snr[b]);
      ++pairs;
    }
  }
  const double expected = best - total / static_cast<double>(pairs);
  const auto r = regret(run_policy_trial(RandomKPolicy{}, p, w, 9, w.length)).values;
  EXPECT_NEAR(r.back(), expected, 0.1);
}

TEST(Policies, BanditVariantsFindTheGoodPair) {
  const auto w = pamlr::testing::two_good(10, 3000);
  PamlrParams p;
  p.lambda_p = 1;
  for (const Policy& policy : std::vector<Policy>{PamlrPolicy{}, EpsGreedyPolicy{0.05}, UcbPolicy{0.5}}) {
    const auto log = run_policy_trial(policy, p, w, 4, 3000);
    std::vector<ChannelId> last(log.selected_at(log.size() - 1).begin(), log.selected_at(log.size() - 1).end());
    std::sort(last.begin(), last.end());
    EXPECT_EQ(last, (std::vector<ChannelId>{ChannelId{0}, ChannelId{1}})) << policy_name(policy);
  }
}

// ---------------------------------------------------------------- Monte Carlo

namespace {

MonteCarloResult small_mc(unsigned jobs, std::size_t trials = 6, std::size_t every = 1) {
  PamlrParams p;
  ScenarioSetup setup;
  setup.kind = ScenarioKind::C;
  setup.horizon = 300;
  MonteCarloOptions mc;
  mc.trials = trials;
  mc.horizon = 300;
  mc.jobs = jobs;
  mc.checkpoint_every = every;
  mc.master_seed = 11;
  return run_monte_carlo(PamlrPolicy{}, p, [&](std::uint64_t s) { return make_environment(setup, s); }, mc);
}

}  // namespace

TEST(MonteCarlo, SingleTrialHasZeroSpread) {
  const auto r = small_mc(1, 1);
  for (double s : r.regret_std) ASSERT_EQ(s, 0.0);
  for (double s : r.energy_std) ASSERT_EQ(s, 0.0);
  ASSERT_EQ(r.trials.size(), 1u);
  EXPECT_EQ(r.trials[0].seed, trial_seed(11, 0));
}

TEST(MonteCarlo, JobsDoNotChangeResults) {
  const auto a = small_mc(1);
  const auto b = small_mc(3);
  EXPECT_EQ(a.regret_mean, b.regret_mean);
  EXPECT_EQ(a.regret_std, b.regret_std);
  EXPECT_EQ(a.energy_mean, b.energy_mean);
  for (std::size_t i = 0; i < a.trials.size(); ++i) EXPECT_EQ(a.trials[i].seed, b.trials[i].seed);
}

TEST(MonteCarlo, MeanMatchesIndividualTrials) {
  const auto r = small_mc(1, 4);
  PamlrParams p;
  ScenarioSetup setup;
  setup.kind = ScenarioKind::C;
  setup.horizon = 300;
  std::vector<double> finals;
  for (std::size_t i = 0; i < 4; ++i) {
    const auto seed = trial_seed(11, i);
    const auto env = make_environment(setup, env_seed(seed));
    finals.push_back(regret(run_trial(p, env, algo_seed(seed), 300)).values.back());
  }
  const double mean = (finals[0] + finals[1] + finals[2] + finals[3]) / 4;
  double var = 0;
  for (double f : finals) var += (f - mean) * (f - mean);
  EXPECT_NEAR(r.regret_mean.back(), mean, 1e-9);
  EXPECT_NEAR(r.regret_std.back(), std::sqrt(var / 4), 1e-9);
}

TEST(MonteCarlo, Decimation) {
  const auto r = small_mc(1, 2, 7);
  EXPECT_EQ(r.checkpoints, checkpoint_slots(300, 7));
  EXPECT_EQ(r.checkpoints.front(), 7u);
  EXPECT_EQ(r.checkpoints.back(), 300u);
  EXPECT_EQ(r.regret_mean.size(), r.checkpoints.size());
}

TEST(MonteCarlo, TruncationReported) {
  PamlrParams p;
  MonteCarloOptions mc;
  mc.trials = 2;
  mc.horizon = 500;
  const auto r = run_monte_carlo(PamlrPolicy{}, p, [](std::uint64_t) { return pamlr::testing::two_good(10, 200); }, mc);
  EXPECT_TRUE(r.any_truncated);
  EXPECT_EQ(r.checkpoints.back(), 200u);
}

TEST(MonteCarlo, FailingTrialNamesItsSeed) {
  PamlrParams p;
  MonteCarloOptions mc;
  mc.trials = 3;
  mc.horizon = 10;
  try {
    run_monte_carlo(PamlrPolicy{}, p, [](std::uint64_t) -> ConstantWorld { throw std::runtime_error("boom"); }, mc);
    FAIL();
  } catch (const TrialFailure& e) {
    EXPECT_EQ(e.seed(), trial_seed(1, 0));
  }
}

TEST(MonteCarlo, CsvSchema) {
  const auto r = small_mc(1, 2, 100);
  std::ostringstream os;
  write_results_csv(os, {{"pamlr", r}});
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "policy,t,regret_mean,regret_std,energy_mean,energy_std");
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 5);
    EXPECT_EQ(line.rfind("pamlr,", 0), 0u);
  }
  EXPECT_EQ(rows, 3u);
}
