#include <gtest/gtest.h>

#include <cmath>

#include "masterysim/afm_fit.hpp"
#include "oracles.hpp"

using namespace masterysim;

using oracle::practice_domain;
using oracle::recovery_truth;
using oracle::small_log;

TEST(AfmData, PriorCountsPerStudentAndSkill) {
  const auto d = practice_domain(2);
  std::vector<Transaction> t;
  for (std::size_t i = 0; i < 6; ++i) {
    Transaction x;
    x.student_id = i < 3 ? "b" : "a";
    x.step_id = std::to_string(i);
    x.skill_ids = {i % 2 ? "s1" : "s0"};
    x.row_index = i;
    t.push_back(x);
  }
  Transaction unknown = t[0];
  unknown.skill_ids = {"nope"};
  t.push_back(unknown);
  const auto data = build_afm_data(t, d);
  EXPECT_EQ(data.students, (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(data.dropped, 1u);
  ASSERT_EQ(data.observations.size(), 6u);
  // student b: s0, s1, s0 -> prior counts 0, 0, 1
  EXPECT_EQ(data.observations[0].prior_counts[0], 0.0);
  EXPECT_EQ(data.observations[2].prior_counts[0], 1.0);
  // student a starts from zero: s1, s0, s1 -> 0, 0, 1
  EXPECT_EQ(data.observations[3].prior_counts[0], 0.0);
  EXPECT_EQ(data.observations[5].prior_counts[0], 1.0);
}

TEST(AfmFit, LikelihoodMatchesDirectSum) {
  const auto log = small_log();
  const auto d = practice_domain(3);
  const auto data = build_afm_data(log, d);
  Rng rng(1);
  std::vector<double> w(data.parameter_count());
  for (double& x : w) x = rng.normal(0.0, 0.7);
  double ll = 0.0;
  for (const auto& o : data.observations) {
    double z = w[0] + w[data.theta_offset() + o.student];
    for (std::size_t j = 0; j < o.skills.size(); ++j)
      z += w[data.beta_offset() + o.skills[j]] + w[data.gamma_offset() + o.skills[j]] * o.prior_counts[j];
    const double p = oracle::logistic(z);
    ll += o.correct > 0.5 ? std::log(p) : std::log(1.0 - p);
  }
  EXPECT_NEAR(afm_log_likelihood(data, w), ll, 1e-10);
}

TEST(AfmFit, GradientMatchesCentralDifferences) {
  const auto data = build_afm_data(small_log(), practice_domain(3));
  ASSERT_EQ(data.observations.size(), 50u);
  Rng rng(2);
  const double h = 1e-5;
  double worst = 0.0;
  for (int point = 0; point < 20; ++point) {
    std::vector<double> w(data.parameter_count());
    for (double& x : w) x = rng.normal(0.0, 1.0);
    const auto g = afm_gradient(data, w, 1.0);
    for (std::size_t i = 0; i < w.size(); ++i) {
      auto up = w, down = w;
      up[i] += h;
      down[i] -= h;
      const double fd = (afm_objective(data, up, 1.0) - afm_objective(data, down, 1.0)) / (2 * h);
      const double scale = std::max(std::abs(fd), std::abs(g[i]));
      if (scale < 1e-8) {
        EXPECT_LT(std::abs(fd - g[i]), 1e-8);
        continue;
      }
      worst = std::max(worst, std::abs(fd - g[i]) / scale);
    }
  }
  EXPECT_LT(worst, 1e-4);
}

TEST(AfmFit, RecoversDifficultiesFromSimulatedLog) {
  const auto d = practice_domain(5);
  const auto truth = recovery_truth();
  const auto log = sample_afm_transactions(truth, d, {500, 50, 3});
  ASSERT_EQ(log.size(), 25000u);
  const auto fit = fit_afm(log, d);
  EXPECT_TRUE(fit.report.converged);
  for (std::size_t k = 0; k < 5; ++k) {
    EXPECT_NEAR(fit.params.difficulty[k], truth.difficulty[k], 0.15) << k;
    EXPECT_GE(fit.params.learn_slope[k], 0.0);
  }
  EXPECT_EQ(fit.report.n_students, 500u);
}

TEST(AfmFit, ObjectiveNeverDecreases) {
  const auto data = build_afm_data(small_log(4), practice_domain(3));
  double prev = -1e300;
  for (std::size_t k = 0; k <= 60; ++k) {
    AfmFitOptions o;
    o.max_iterations = k;
    const auto fit = fit_afm(data, o);
    EXPECT_GE(fit.report.objective, prev - 1e-12) << k;
    prev = fit.report.objective;
  }
}

TEST(AfmFit, SingleSkillInterceptIsLogOdds) {
  for (int correct : {50, 70, 23}) {
    std::vector<Transaction> log;
    for (int i = 0; i < 100; ++i) {
      Transaction t;
      t.student_id = "only";
      t.step_id = std::to_string(i);
      t.skill_ids = {"s0"};
      t.outcome = i < correct ? Outcome::Correct : Outcome::Incorrect;
      t.row_index = static_cast<std::size_t>(i);
      log.push_back(t);
    }
    AfmFitOptions o;
    o.fix_learn_slope_zero = true;
    o.gradient_tolerance = 1e-9;
    const auto fit = fit_afm(log, practice_domain(1), o);
    EXPECT_TRUE(fit.report.converged);
    const double rate = correct / 100.0;
    EXPECT_NEAR(fit.params.intercept + fit.params.difficulty[0] + fit.theta[0], std::log(rate / (1 - rate)), 1e-6);
    EXPECT_EQ(fit.params.learn_slope[0], 0.0);
  }
}

TEST(AfmFit, AllCorrectDataIsFlaggedAndStaysFinite) {
  auto log = small_log();
  for (auto& t : log) t.outcome = Outcome::Correct;
  const auto fit = fit_afm(log, practice_domain(3));
  EXPECT_TRUE(fit.report.separation);
  EXPECT_GT(fit.params.intercept, 5.0);
  EXPECT_TRUE(std::isfinite(fit.params.intercept));
  EXPECT_TRUE(std::isfinite(fit.report.log_likelihood));
  for (double b : fit.params.difficulty) EXPECT_TRUE(std::isfinite(b));
}

TEST(AfmFit, HeldOutLikelihoodBeatsZeroParameters) {
  const auto d = practice_domain(5);
  const auto truth = recovery_truth();
  const auto train = sample_afm_transactions(truth, d, {200, 50, 4});
  const auto fit = fit_afm(train, d);
  // Held-out learners are new, so they are scored at the fitted mean ability.
  const auto test = sample_afm_transactions(truth, d, {200, 50, 5});
  const auto data = build_afm_data(test, d);
  std::vector<double> fitted(data.parameter_count(), 0.0), zero(data.parameter_count(), 0.0);
  fitted[0] = fit.params.intercept + fit.params.ability.mean;
  for (std::size_t k = 0; k < 5; ++k) {
    fitted[data.beta_offset() + k] = fit.params.difficulty[k];
    fitted[data.gamma_offset() + k] = fit.params.learn_slope[k];
  }
  EXPECT_GT(afm_log_likelihood(data, fitted), afm_log_likelihood(data, zero));
}

TEST(AfmFit, SlopesProjectedNonNegative) {
  const auto d = practice_domain(3);
  // a log where accuracy falls with practice pushes the raw slope negative
  std::vector<Transaction> log;
  for (std::size_t s = 0; s < 30; ++s)
    for (std::size_t o = 0; o < 20; ++o) {
      Transaction t;
      t.student_id = "u" + std::to_string(s);
      t.step_id = std::to_string(o);
      t.skill_ids = {"s" + std::to_string(o % 3)};
      t.outcome = o < 10 ? Outcome::Correct : Outcome::Incorrect;
      t.row_index = log.size();
      log.push_back(t);
    }
  const auto fit = fit_afm(log, d);
  for (double g : fit.params.learn_slope) EXPECT_GE(g, 0.0);
  EXPECT_TRUE(fit.report.converged);
  AfmFitOptions pinned;
  pinned.fix_learn_slope_zero = true;
  for (double g : fit_afm(log, d, pinned).params.learn_slope) EXPECT_EQ(g, 0.0);
}

TEST(AfmFit, EmptyInputThrows) {
  EXPECT_THROW(fit_afm(std::vector<Transaction>{}, practice_domain(1)), Error);
}
