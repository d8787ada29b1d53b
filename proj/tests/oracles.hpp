#pragma once

// Reference computations written independently of the library code, used as
// test oracles. Kept deliberately naive.

#include <cmath>
#include <string>
#include <vector>

#include "masterysim/domain.hpp"
#include "masterysim/ingestion.hpp"
#include "masterysim/rng.hpp"

namespace oracle {

// Two-state hidden Markov model, one observation then one transition, written
// as explicit joint probabilities and a transition matrix.
inline double bkt_step(double prior, bool correct, double learn, double guess, double slip) {
  const double p_obs_given_known = correct ? 1.0 - slip : slip;
  const double p_obs_given_unknown = correct ? guess : 1.0 - guess;
  const double joint_known = prior * p_obs_given_known;
  const double joint_unknown = (1.0 - prior) * p_obs_given_unknown;
  const double evidence = joint_known + joint_unknown;
  const double post_known = joint_known / evidence;
  const double post_unknown = joint_unknown / evidence;
  // T = [[1, 0], [learn, 1 - learn]] rows = from {known, unknown}
  const double next_known = post_known * 1.0 + post_unknown * learn;
  const double next_unknown = post_known * 0.0 + post_unknown * (1.0 - learn);
  return next_known / (next_known + next_unknown);
}

inline double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// P(correct) for a step touching `skills` given prior practice counts.
inline double afm_probability(double intercept, double ability, const std::vector<double>& beta,
                              const std::vector<double>& gamma, const std::vector<std::size_t>& skills,
                              const std::vector<double>& counts) {
  double z = intercept + ability;
  for (std::size_t k : skills) z += beta[k] + gamma[k] * counts[k];
  return logistic(z);
}

// Mean over mastered skills of opportunities after mastery.
inline double overpractice(const std::vector<unsigned>& opportunities, const std::vector<int>& mastered_at) {
  double total = 0.0;
  int n = 0;
  for (std::size_t k = 0; k < opportunities.size(); ++k) {
    if (mastered_at[k] < 0) continue;
    total += static_cast<double>(opportunities[k]) - mastered_at[k];
    ++n;
  }
  return n == 0 ? 0.0 : total / n;
}

// Builds a domain from a compact description: each problem is a list of steps,
// each step a list of skill indices.
inline masterysim::Domain make_domain(std::size_t skills, const std::vector<std::vector<std::vector<std::size_t>>>& problems,
                                      const std::string& name = "test") {
  std::vector<std::string> ids;
  for (std::size_t k = 0; k < skills; ++k) ids.push_back("s" + std::to_string(k));
  std::vector<masterysim::Problem> ps;
  for (std::size_t p = 0; p < problems.size(); ++p) {
    masterysim::Problem prob;
    prob.id = "p" + std::to_string(p);
    for (const auto& step : problems[p]) prob.steps.push_back(masterysim::Step{step});
    ps.push_back(std::move(prob));
  }
  return masterysim::Domain(name, ids, std::move(ps));
}

inline masterysim::AfmParams flat_afm(std::size_t skills, double intercept = 0.0, double beta = 0.0,
                                      double gamma = 0.1, double ability_sd = 0.0) {
  masterysim::AfmParams a;
  a.intercept = intercept;
  a.ability = {0.0, ability_sd};
  a.difficulty.assign(skills, beta);
  a.learn_slope.assign(skills, gamma);
  return a;
}

// One problem per skill, one single-skill step each.
inline masterysim::Domain practice_domain(std::size_t k) {
  std::vector<std::vector<std::vector<std::size_t>>> problems;
  for (std::size_t s = 0; s < k; ++s) problems.push_back({{s}});
  return make_domain(k, problems);
}

// 50 transactions, 5 students, 3 skills, some two-skill steps.
inline std::vector<masterysim::Transaction> small_log(std::uint64_t seed = 21) {
  masterysim::Rng rng(seed);
  std::vector<masterysim::Transaction> out;
  for (std::size_t i = 0; i < 50; ++i) {
    masterysim::Transaction t;
    t.student_id = "u" + std::to_string(i % 5);
    t.problem_id = "p";
    t.step_id = "s" + std::to_string(i);
    t.skill_ids = {"s" + std::to_string(rng.uniform_index(3))};
    if (rng.uniform() < 0.3) {
      const std::string other = "s" + std::to_string(rng.uniform_index(3));
      if (other != t.skill_ids[0]) t.skill_ids.push_back(other);
    }
    t.outcome = rng.uniform() < 0.6 ? masterysim::Outcome::Correct : masterysim::Outcome::Incorrect;
    t.row_index = i;
    out.push_back(t);
  }
  return out;
}

// Known parameters for the generate-then-fit loop; difficulties are centred.
inline masterysim::AfmParams recovery_truth() {
  masterysim::AfmParams t;
  t.intercept = 0.4;
  t.ability = {0.0, 0.8};
  t.difficulty = {-0.7, -0.25, 0.05, 0.35, 0.55};
  t.learn_slope = {0.04, 0.08, 0.12, 0.06, 0.1};
  return t;
}

}  // namespace oracle
