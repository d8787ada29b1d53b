#pragma once

// Learner task-selection rules.
//
// The learner sees a candidate set that may contain skills already at or
// above the mastery threshold (the unconstrained choice set is every skill).
// All rules except MinWorstCaseLoss aim at progress and only consider
// below-threshold candidates when any exist. The risk-averse rule ranks every
// candidate by its worst-case projection, which is what pulls it back onto
// skills it has already mastered.
//
// Ties always go to the lowest skill index.

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "masterysim/domain.hpp"
#include "masterysim/rng.hpp"
#include "masterysim/student_model.hpp"

namespace masterysim {

struct OutcomeProjection {
  double best = 0.0;   // mastery after a correct virtual attempt
  double worst = 0.0;  // mastery after an incorrect virtual attempt
  double usual = 0.0;  // p_correct * best + (1 - p_correct) * worst
  double p_correct = 0.0;
};

// One-step lookahead on a single-skill virtual step.
template <class Counts>
OutcomeProjection project_outcomes(double p_mastery, SkillIndex skill, const AfmParams& afm, double ability,
                                   const BktSkillParams& bkt, const Counts& practice_counts) {
  const std::array<SkillIndex, 1> only{skill};
  OutcomeProjection out;
  out.p_correct = afm_predict(afm, ability, std::span<const SkillIndex>(only), practice_counts);
  out.best = bkt_update(p_mastery, true, bkt);
  out.worst = bkt_update(p_mastery, false, bkt);
  out.usual = out.p_correct * out.best + (1.0 - out.p_correct) * out.worst;
  return out;
}

inline OutcomeProjection project_outcomes(const KnowledgeState& state, SkillIndex skill, const AfmParams& afm,
                                          double ability, const BktParams& bkt) {
  return project_outcomes(state.mastery.at(skill), skill, afm, ability, bkt.for_skill(skill), state.opportunities);
}

inline bool needs_projections(Strategy s) noexcept {
  return s == Strategy::MaxUsualImprovement || s == Strategy::MaxUsualOutcome || s == Strategy::MinWorstCaseLoss;
}

// Whether the rule may pick a candidate already at or above the threshold
// while below-threshold candidates are available.
inline bool may_select_mastered(Strategy s) noexcept { return s == Strategy::MinWorstCaseLoss; }

struct StrategyMemory {
  std::optional<SkillIndex> blocking_skill;
  std::optional<SkillIndex> interleave_cursor;
};

namespace detail {

// First position (lowest skill index on ties) maximising `score`.
template <class Score>
SkillIndex argmax(std::span<const SkillIndex> candidates, Score&& score) {
  SkillIndex best = candidates.front();
  double best_score = score(0);
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    const double s = score(i);
    if (s > best_score || (s == best_score && candidates[i] < best)) {
      best = candidates[i];
      best_score = s;
    }
  }
  return best;
}

}  // namespace detail

// `projections[i]` belongs to `candidates[i]`; it may be empty for rules that
// do not use projections. Updates `memory` with the selection.
inline SkillIndex select_skill(Strategy strategy, std::span<const double> mastery,
                               std::span<const SkillIndex> candidates,
                               std::span<const OutcomeProjection> projections, double threshold, Rng& rng,
                               StrategyMemory& memory) {
  if (candidates.empty()) throw Error("select_skill: empty candidate set");
  if (needs_projections(strategy) && projections.size() != candidates.size())
    throw Error("select_skill: projections missing for an outcome-informed strategy");

  // Working set: below-threshold candidates unless the rule may revisit mastered ones.
  std::vector<SkillIndex> pool;
  std::vector<std::size_t> pos;  // position of pool[i] within candidates
  for (std::size_t i = 0; i < candidates.size(); ++i)
    if (may_select_mastered(strategy) || mastery[candidates[i]] < threshold) {
      pool.push_back(candidates[i]);
      pos.push_back(i);
    }
  if (pool.empty()) {
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      pool.push_back(candidates[i]);
      pos.push_back(i);
    }
  }
  const std::span<const SkillIndex> view(pool);

  SkillIndex chosen = pool.front();
  switch (strategy) {
    case Strategy::StrengthTargeting:
      chosen = detail::argmax(view, [&](std::size_t i) { return mastery[pool[i]]; });
      break;
    case Strategy::WeaknessTargeting:
      chosen = detail::argmax(view, [&](std::size_t i) { return -mastery[pool[i]]; });
      break;
    case Strategy::Interleaving: {
      // Next candidate after the cursor in skill-index order, wrapping around.
      std::optional<SkillIndex> after, lowest;
      for (SkillIndex k : pool) {
        if (!lowest || k < *lowest) lowest = k;
        if (memory.interleave_cursor && k > *memory.interleave_cursor && (!after || k < *after)) after = k;
      }
      chosen = after ? *after : *lowest;
      break;
    }
    case Strategy::Blocking: {
      const bool keep = memory.blocking_skill &&
                        std::find(pool.begin(), pool.end(), *memory.blocking_skill) != pool.end() &&
                        mastery[*memory.blocking_skill] < threshold;
      chosen = keep ? *memory.blocking_skill : *std::min_element(pool.begin(), pool.end());
      break;
    }
    case Strategy::Random:
      chosen = pool[rng.uniform_index(pool.size())];
      break;
    case Strategy::MaxUsualImprovement:
      chosen = detail::argmax(view, [&](std::size_t i) { return projections[pos[i]].usual - mastery[pool[i]]; });
      break;
    case Strategy::MaxUsualOutcome:
      chosen = detail::argmax(view, [&](std::size_t i) { return projections[pos[i]].usual; });
      break;
    case Strategy::MinWorstCaseLoss:
      chosen = detail::argmax(view, [&](std::size_t i) { return projections[pos[i]].worst; });
      break;
  }
  memory.blocking_skill = chosen;
  memory.interleave_cursor = chosen;
  return chosen;
}

}  // namespace masterysim
