#include <gtest/gtest.h>

#include <algorithm>
#include <map>

#include "masterysim/strategies.hpp"
#include "oracles.hpp"
#include "strategy_properties.hpp"

using namespace masterysim;
using props::Case;
using props::kThreshold;
using props::pick;

namespace {
constexpr int kCases = 1000;
}  // namespace

TEST(Projection, HandValues) {
  const BktSkillParams q;
  const std::vector<double> counts{0};
  const auto afm = oracle::flat_afm(1, 0.0, 0.0, 0.0);  // p_correct = 0.5
  const auto p = project_outcomes(0.25, 0, afm, 0.0, q, counts);
  EXPECT_NEAR(p.p_correct, 0.5, 1e-15);
  EXPECT_NEAR(p.best, 0.688, 1e-12);
  EXPECT_NEAR(p.worst, 0.2512, 1e-12);
  EXPECT_NEAR(p.usual, 0.4696, 1e-12);

  const auto one = project_outcomes(1.0, 0, afm, 0.0, q, counts);
  EXPECT_EQ(one.best, 1.0);
  EXPECT_EQ(one.worst, 1.0);
  EXPECT_EQ(one.usual, 1.0);

  const auto sure = project_outcomes(0.4, 0, oracle::flat_afm(1, 60.0), 0.0, q, counts);
  EXPECT_NEAR(sure.usual, sure.best, 1e-15);
}

TEST(Projection, UsualBetweenWorstAndBestRandomized) {
  Rng rng(1);
  for (int i = 0; i < kCases; ++i) {
    const auto c = props::random_case(rng);
    for (const auto& p : c.projections) {
      EXPECT_LE(p.worst, p.usual + 1e-15);
      EXPECT_LE(p.usual, p.best + 1e-15);
    }
  }
}

TEST(SelectSkill, SpecExamples) {
  Case c;
  c.mastery = {0.3, 0.7};
  c.candidates = {0, 1};
  EXPECT_EQ(pick(Strategy::WeaknessTargeting, c), 0u);
  EXPECT_EQ(pick(Strategy::StrengthTargeting, c), 1u);

  // Higher mastery loses less on a wrong answer.
  c.mastery = {0.9, 0.4};
  const BktSkillParams q;
  const std::vector<double> counts{0, 0};
  const auto afm = oracle::flat_afm(2);
  c.projections = {project_outcomes(0.9, 0, afm, 0.0, q, counts), project_outcomes(0.4, 1, afm, 0.0, q, counts)};
  EXPECT_GT(oracle::bkt_step(0.9, false, q.p_learn, q.p_guess, q.p_slip),
            oracle::bkt_step(0.4, false, q.p_learn, q.p_guess, q.p_slip));
  EXPECT_EQ(pick(Strategy::MinWorstCaseLoss, c), 0u);

  Case r;
  r.mastery = {0.1, 0.2, 0.3};
  r.candidates = {0, 1, 2};
  StrategyMemory mem;
  mem.interleave_cursor = 0;
  Rng rng(0);
  EXPECT_EQ(pick(Strategy::Interleaving, r, mem, rng), 1u);
}

TEST(SelectSkill, EmptyCandidatesOrMissingProjectionsThrow) {
  Case c;
  c.mastery = {0.2};
  StrategyMemory mem;
  Rng rng(0);
  for (Strategy s : kAllStrategies) EXPECT_THROW(pick(s, c, mem, rng), Error);
  c.candidates = {0};
  EXPECT_THROW(pick(Strategy::MaxUsualImprovement, c, mem, rng), Error);
  EXPECT_NO_THROW(pick(Strategy::WeaknessTargeting, c, mem, rng));
}

class SelectSkillProperty : public ::testing::TestWithParam<props::Property> {};

TEST_P(SelectSkillProperty, HoldsOnRandomCases) { EXPECT_EQ(GetParam().check(kCases), ""); }

INSTANTIATE_TEST_SUITE_P(Randomized, SelectSkillProperty, ::testing::ValuesIn(props::all()),
                         [](const auto& info) { return std::string(info.param.name); });

TEST(SelectSkill, RandomCoversPoolUniformly) {
  Case c;
  c.mastery = {0.1, 0.99, 0.3, 0.5};
  c.candidates = {0, 1, 2, 3};
  StrategyMemory mem;
  Rng r(10);
  std::map<SkillIndex, int> hist;
  for (int i = 0; i < 30000; ++i) ++hist[pick(Strategy::Random, c, mem, r)];
  EXPECT_EQ(hist.count(1), 0u);  // mastered skill excluded while others remain
  for (SkillIndex s : {0u, 2u, 3u}) EXPECT_NEAR(hist[s], 10000, 400);
}
