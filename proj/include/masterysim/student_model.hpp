#pragma once

// AFM generates step correctness; BKT tracks the learner's mastery estimate.

#include <cmath>
#include <span>

#include "masterysim/domain.hpp"
#include "masterysim/rng.hpp"

namespace masterysim {

struct StepOutcome {
  bool correct = false;
  double p_correct = 0.0;
};

inline double sigmoid(double x) noexcept {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Logit of the AFM correctness probability for a step exercising `skills`.
template <class Counts>
double afm_logit(const AfmParams& params, double ability, std::span<const SkillIndex> skills,
                 const Counts& practice_counts) {
  if (skills.empty()) throw Error("afm_predict: step has no skills");
  double z = params.intercept + ability;
  for (SkillIndex k : skills) {
    if (k >= params.difficulty.size() || k >= params.learn_slope.size())
      throw Error("afm_predict: skill index out of range");
    z += params.difficulty[k] + params.learn_slope[k] * static_cast<double>(practice_counts[k]);
  }
  return z;
}

template <class Counts>
double afm_predict(const AfmParams& params, double ability, std::span<const SkillIndex> skills,
                   const Counts& practice_counts) {
  return sigmoid(afm_logit(params, ability, skills, practice_counts));
}

// Bayesian posterior given the observation, followed by the learning transition.
// A zero evidence denominator (only at degenerate parameter corners) keeps the prior.
inline double bkt_update(double p_mastery, bool correct, const BktSkillParams& q) noexcept {
  double num, den;
  if (correct) {
    num = p_mastery * (1.0 - q.p_slip);
    den = num + (1.0 - p_mastery) * q.p_guess;
  } else {
    num = p_mastery * q.p_slip;
    den = num + (1.0 - p_mastery) * (1.0 - q.p_guess);
  }
  const double obs = den > 0.0 ? num / den : p_mastery;
  const double next = obs + (1.0 - obs) * q.p_learn;
  return std::clamp(next, 0.0, 1.0);
}

inline bool is_mastered(const KnowledgeState& state, SkillIndex skill, double threshold) {
  return state.mastery.at(skill) >= threshold;
}

// One Bernoulli draw per step; the single outcome updates every skill on the step.
// Practice counts used by AFM are the opportunity counts before this step.
inline StepOutcome simulate_step(KnowledgeState& state, const Step& step, const AfmParams& afm, double ability,
                                 const BktParams& bkt, double threshold, Rng& rng) {
  StepOutcome out;
  out.p_correct = afm_predict(afm, ability, std::span<const SkillIndex>(step.skills), state.opportunities);
  out.correct = rng.bernoulli(out.p_correct);
  for (SkillIndex k : step.skills) {
    state.mastery[k] = bkt_update(state.mastery[k], out.correct, bkt.for_skill(k));
    ++state.opportunities[k];
    if (out.correct) ++state.success_count[k];
    if (!state.mastered_at[k] && state.mastery[k] >= threshold) state.mastered_at[k] = state.opportunities[k];
  }
  return out;
}

}  // namespace masterysim
