#include <gtest/gtest.h>

#include <array>

#include "support.hpp"

using namespace ontotutor;
using testing_support::random_vector;

namespace {

const std::vector<double> kPreference{0.9, 0.2, 0.7, 0.4, 0.6};

StudentProfile profile(double theta = 0.5, double frustration = 0.2) {
  StudentProfile p;
  p.skills["linear"] = theta;
  p.preference = kPreference;
  p.frustration = frustration;
  return p;
}

void expect_metrics_valid(const RawMetrics& y) {
  EXPECT_GE(y.quiz, 0.0);
  EXPECT_LE(y.quiz, 1.0);
  EXPECT_GT(y.total_time, 0.0);
  EXPECT_GE(y.engaged_time, 0.0);
  EXPECT_LE(y.engaged_time, y.total_time);
  EXPECT_GE(y.interactions, 0.0);
  EXPECT_TRUE(y.emotion == 0 || y.emotion == 1 || y.emotion == 2);
}

// Reward a single section earns through the full telemetry pipeline, with
// zero noise so a single draw is the expectation.
double pipeline_reward(const StudentProfile& p, const ActionVec& a) {
  const auto binding = standard_binding();
  const SimOptions opt{true, kDefaultInteractionMax};
  Rng rng(0);
  const StateVec before{ontotutor::apply(binding, observe(p, "linear", rng, opt).as_vector())};
  const auto out = run_section(p, "linear", a, rng, opt);
  const StateVec after{ontotutor::apply(binding, out.metrics.as_vector())};
  return reward(before, after, std::vector<double>{0.6, 0.25, 0.15});
}

}  // namespace

TEST(SpawnPopulation, ZeroSpreadGivesMeans) {
  PopulationSpec spec;
  spec.concepts = {"linear"};
  spec.skill = {0.35, 0.0};
  const auto pop = spawn_population(spec);
  ASSERT_EQ(pop.size(), 1u);
  EXPECT_EQ(pop[0].skills.at("linear"), 0.35);
  EXPECT_EQ(pop[0].preference, spec.preference_mean);
  EXPECT_EQ(pop[0].learn_rate, 0.1);
  EXPECT_EQ(pop[0].base_time, 200.0);
  EXPECT_EQ(pop[0].engagement_base, 0.8);
  EXPECT_EQ(pop[0].frustration, 0.2);
}

TEST(SpawnPopulation, SameSeedSamePopulation) {
  PopulationSpec spec;
  spec.count = 20;
  spec.concepts = {"a", "b"};
  spec.skill = {0.5, 0.3};
  spec.preference_spread = {0.2, 0.2, 0.2, 0.2, 0.2};
  spec.seed = 99;
  EXPECT_EQ(spawn_population(spec), spawn_population(spec));
  auto other = spec;
  other.seed = 100;
  EXPECT_NE(spawn_population(spec), spawn_population(other));
}

TEST(SpawnPopulation, HundredStudentsSatisfyBounds) {
  PopulationSpec spec;
  spec.count = 100;
  spec.concepts = {"a", "b", "c"};
  spec.skill = {0.5, 0.6};
  spec.preference_spread = {0.5, 0.5, 0.5, 0.5, 0.5};
  spec.learn_rate = {0.1, 0.2};
  spec.base_time = {200, 300};
  spec.engagement = {0.8, 0.5};
  spec.frustration = {0.2, 0.6};
  spec.seed = 7;
  for (const auto& p : spawn_population(spec)) {
    for (const auto& [_, theta] : p.skills) {
      EXPECT_GE(theta, 0.0);
      EXPECT_LE(theta, 1.0);
    }
    for (double v : p.preference) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
    EXPECT_GT(p.learn_rate, 0.0);
    EXPECT_LE(p.learn_rate, 0.3);
    EXPECT_GT(p.base_time, 0.0);
    EXPECT_GE(p.engagement_base, 0.0);
    EXPECT_LE(p.engagement_base, 1.0);
    EXPECT_GE(p.frustration, 0.0);
    EXPECT_LE(p.frustration, 1.0);
  }
}

TEST(SpawnPopulation, BadSpecs) {
  PopulationSpec spec;
  spec.count = 0;
  EXPECT_THROW(spawn_population(spec), Error);
  spec = {};
  spec.skill.spread = -0.1;
  EXPECT_THROW(spawn_population(spec), Error);
  spec = {};
  spec.preference_spread = {0.1};
  EXPECT_THROW(spawn_population(spec), Error);
}

TEST(MatchScore, HandCases) {
  EXPECT_EQ(match_score(profile(), ActionVec{kPreference}), 1.0);
  StudentProfile zero = profile();
  zero.preference = {0, 0, 0, 0, 0};
  EXPECT_EQ(match_score(zero, ActionVec{{1, 1, 1, 1, 1}}), 0.0);
  EXPECT_NEAR(match_score(profile(), ActionVec{{0.5, 0.5, 0.5, 0.5, 0.5}}), 0.78, 1e-12);
  EXPECT_THROW(match_score(profile(), ActionVec{{0.5}}), Error);
}

TEST(RunSection, MatchedAssistanceRaisesSkill) {
  const SimOptions opt{true, 60.0};
  Rng rng(1);
  const auto out = run_section(profile(0.5), "linear", ActionVec{kPreference}, rng, opt);
  EXPECT_NEAR(out.profile.skills.at("linear"), 0.6, 1e-12);
  EXPECT_NEAR(out.metrics.quiz, 0.6, 1e-12);
}

TEST(RunSection, NeutralMatchKeepsFrustration) {
  StudentProfile p = profile(0.5, 0.4);
  p.preference = {0, 0, 0, 0, 0};
  Rng rng(2);
  const auto out = run_section(p, "linear", ActionVec{{0.5, 0.5, 0.5, 0.5, 0.5}}, rng, {true, 60.0});
  EXPECT_EQ(out.profile.frustration, 0.4);
}

TEST(RunSection, PerfectMatchAtZeroFrustration) {
  Rng rng(3);
  const auto out = run_section(profile(0.5, 0.0), "linear", ActionVec{kPreference}, rng, {true, 60.0});
  EXPECT_EQ(out.profile.frustration, 0.0);
  EXPECT_EQ(out.metrics.emotion, 2);
}

TEST(RunSection, ZeroNoiseTelemetry) {
  Rng rng(4);
  const auto out = run_section(profile(0.5, 0.2), "linear", ActionVec{{0.5, 0.5, 0.5, 0.5, 0.5}}, rng, {true, 60.0});
  const double m = 0.78;
  EXPECT_NEAR(out.metrics.total_time, 200.0 * 1.2, 1e-9);
  EXPECT_NEAR(out.metrics.engaged_time, 240.0 * 0.8 * (0.5 + 0.5 * m), 1e-9);
  EXPECT_EQ(out.metrics.interactions, std::round(60.0 * 0.8 * m));
  EXPECT_NEAR(out.profile.frustration, 0.2 + 0.3 * (0.5 - m), 1e-12);
  EXPECT_EQ(out.metrics.emotion, 2);
}

TEST(RunSection, UnknownConcept) {
  Rng rng(5);
  try {
    run_section(profile(), "quadratic", ActionVec{kPreference}, rng, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnknownConcept);
  }
}

TEST(EmotionCode, Thresholds) {
  EXPECT_EQ(emotion_code(0.0), 2);
  EXPECT_EQ(emotion_code(0.2499), 2);
  EXPECT_EQ(emotion_code(0.25), 1);
  EXPECT_EQ(emotion_code(0.5999), 1);
  EXPECT_EQ(emotion_code(0.6), 0);
}

TEST(OptimalAction, IsPreference) { EXPECT_EQ(optimal_action(profile()).values, kPreference); }

TEST(SimProperties, RawMetricsAlwaysValid) {
  Rng rng(6);
  for (int i = 0; i < 5000; ++i) {
    StudentProfile p;
    p.skills["linear"] = rng.uniform();
    p.preference = random_vector(rng, 5);
    p.learn_rate = rng.uniform(0.001, 0.3);
    p.base_time = rng.uniform(1.0, 1000.0);
    p.engagement_base = rng.uniform();
    p.frustration = rng.uniform();
    const ActionVec a{random_vector(rng, 5)};
    const SimOptions opt{rng.uniform() < 0.5, 60.0};
    expect_metrics_valid(observe(p, "linear", rng, opt));
    const auto out = run_section(p, "linear", a, rng, opt);
    expect_metrics_valid(out.metrics);
    if (opt.zero_noise) {
      ASSERT_GE(out.profile.skills.at("linear"), p.skills.at("linear"));
    }
  }
}

TEST(SimProperties, FixedRngGivesIdenticalSequences) {
  auto run = [] {
    Rng rng(7);
    StudentProfile p = profile();
    std::vector<RawMetrics> seq;
    for (int i = 0; i < 20; ++i) {
      auto out = run_section(p, "linear", ActionVec{{0.3, 0.3, 0.3, 0.3, 0.3}}, rng, {});
      seq.push_back(out.metrics);
      p = out.profile;
    }
    return seq;
  };
  EXPECT_EQ(run(), run());
}

TEST(SimProperties, OptimalActionMaximizesMatchOnGrid) {
  const auto p = profile();
  std::array<int, 5> best{};
  double best_score = -1.0;
  std::array<int, 5> g{};
  for (g[0] = 0; g[0] <= 10; ++g[0])
    for (g[1] = 0; g[1] <= 10; ++g[1])
      for (g[2] = 0; g[2] <= 10; ++g[2])
        for (g[3] = 0; g[3] <= 10; ++g[3])
          for (g[4] = 0; g[4] <= 10; ++g[4]) {
            ActionVec a;
            for (int v : g) a.values.push_back(v / 10.0);
            const double s = match_score(p, a);
            if (s > best_score) {
              best_score = s;
              best = g;
            }
          }
  ActionVec a;
  for (int v : best) a.values.push_back(v / 10.0);
  for (std::size_t k = 0; k < 5; ++k) EXPECT_NEAR(a[k], optimal_action(p)[k], 1e-12);
}

TEST(SimProperties, OptimalActionMaximizesPipelineReward) {
  PopulationSpec spec;
  spec.count = 3;
  spec.concepts = {"linear"};
  spec.skill = {0.4, 0.2};
  spec.preference_mean = {0.9, 0.2, 0.7, 0.4, 0.6};
  spec.frustration = {0.3, 0.2};
  spec.seed = 12;
  for (auto p : spawn_population(spec)) {
    // Snap the preference to the grid so the optimum is a grid point.
    for (auto& v : p.preference) v = std::round(v * 10.0) / 10.0;
    const double at_optimum = pipeline_reward(p, optimal_action(p));
    std::array<int, 5> g{};
    for (g[0] = 0; g[0] <= 10; ++g[0])
      for (g[1] = 0; g[1] <= 10; ++g[1])
        for (g[2] = 0; g[2] <= 10; ++g[2])
          for (g[3] = 0; g[3] <= 10; ++g[3])
            for (g[4] = 0; g[4] <= 10; ++g[4]) {
              ActionVec a;
              for (int v : g) a.values.push_back(v / 10.0);
              ASSERT_LE(pipeline_reward(p, a), at_optimum + 1e-12);
            }
  }
}

TEST(PopulationCsv, HasHeaderAndRows) {
  PopulationSpec spec;
  spec.count = 3;
  spec.concepts = {"linear"};
  const auto csv = population_csv(spawn_population(spec));
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
}
