#pragma once

// System-side constraints: which skills the learner may pick from, and how the
// problem for a chosen skill is drawn.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "masterysim/domain.hpp"
#include "masterysim/rng.hpp"

namespace masterysim {

inline constexpr double kProblemWeightEpsilon = 1e-6;

// Restricts `pool` (normally every skill in the domain).
//   None               -> pool unchanged
//   CloserToMastery    -> the ceil(n * fraction) highest-mastery pool skills that
//                         are still below the threshold (fewer if fewer remain)
//   FurtherFromMastery -> the ceil(n * fraction) lowest-mastery pool skills
// where n is the pool size.
// The result is sorted by skill index and is never empty for a non-empty pool.
inline std::vector<SkillIndex> apply_skill_constraint(SkillConstraint constraint, std::span<const double> mastery,
                                                      std::span<const SkillIndex> pool, double threshold,
                                                      double fraction = 0.5) {
  if (pool.empty()) throw Error("apply_skill_constraint: empty skill pool");
  std::vector<SkillIndex> out;
  if (constraint == SkillConstraint::None) {
    out.assign(pool.begin(), pool.end());
    std::sort(out.begin(), out.end());
    return out;
  }

  std::vector<SkillIndex> ranked;
  if (constraint == SkillConstraint::CloserToMastery) {
    for (SkillIndex k : pool)
      if (mastery[k] < threshold) ranked.push_back(k);
    if (ranked.empty()) ranked.assign(pool.begin(), pool.end());
  } else {
    ranked.assign(pool.begin(), pool.end());
  }

  // Highest mastery first for CloserToMastery, lowest first otherwise; index breaks ties.
  const bool descending = constraint == SkillConstraint::CloserToMastery;
  std::sort(ranked.begin(), ranked.end(), [&](SkillIndex a, SkillIndex b) {
    if (mastery[a] != mastery[b]) return descending ? mastery[a] > mastery[b] : mastery[a] < mastery[b];
    return a < b;
  });
  const auto keep = static_cast<std::size_t>(std::ceil(static_cast<double>(pool.size()) * fraction - 1e-12));
  out.assign(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(std::clamp<std::size_t>(keep, 1, ranked.size())));
  std::sort(out.begin(), out.end());
  return out;
}

// 1 - occurrence-weighted mean success rate over the skills on the problem's
// steps (repeats counted). Unpracticed skills count with success rate p_init.
// Higher is harder; always in [0, 1].
inline double problem_difficulty_score(const Problem& problem, const KnowledgeState& state, const BktParams& bkt) {
  double weighted = 0.0;
  std::size_t occurrences = 0;
  for (const auto& step : problem.steps)
    for (SkillIndex k : step.skills) {
      const auto opp = state.opportunities.at(k);
      const double rate = opp == 0 ? bkt.for_skill(k).p_init
                                   : static_cast<double>(state.success_count[k]) / static_cast<double>(opp);
      weighted += rate;
      ++occurrences;
    }
  if (occurrences == 0) return 0.0;
  return std::clamp(1.0 - weighted / static_cast<double>(occurrences), 0.0, 1.0);
}

struct ProblemWeighting {
  std::vector<double> weights;     // raw, non-negative
  std::vector<double> normalized;  // sums to 1
};

inline ProblemWeighting problem_weights(ProblemConstraint constraint, const Domain& domain,
                                        std::span<const ProblemIndex> problems, const KnowledgeState& state,
                                        const BktParams& bkt) {
  if (problems.empty()) throw Error("problem_weights: empty problem pool");
  ProblemWeighting w;
  w.weights.reserve(problems.size());
  for (ProblemIndex p : problems) {
    double weight = 1.0;
    if (constraint != ProblemConstraint::None) {
      const double score = problem_difficulty_score(domain.problem(p), state, bkt);
      weight = (constraint == ProblemConstraint::PreferHarder ? score : 1.0 - score) + kProblemWeightEpsilon;
    }
    w.weights.push_back(weight);
  }
  const double total = std::accumulate(w.weights.begin(), w.weights.end(), 0.0);
  w.normalized.reserve(w.weights.size());
  for (double x : w.weights) w.normalized.push_back(x / total);
  return w;
}

// Draws an index into `normalized` by inverse CDF on one uniform.
inline std::size_t sample_weighted(std::span<const double> normalized, Rng& rng) {
  const double u = rng.uniform();
  double cumulative = 0.0;
  for (std::size_t i = 0; i < normalized.size(); ++i) {
    cumulative += normalized[i];
    if (u < cumulative) return i;
  }
  // Rounding left u just above the final cumulative sum.
  for (std::size_t i = normalized.size(); i-- > 0;)
    if (normalized[i] > 0.0) return i;
  return normalized.size() - 1;
}

inline ProblemIndex apply_problem_constraint(ProblemConstraint constraint, const Domain& domain,
                                             std::span<const ProblemIndex> problems, const KnowledgeState& state,
                                             const BktParams& bkt, Rng& rng) {
  if (problems.empty()) throw Error("apply_problem_constraint: empty problem pool");
  if (problems.size() == 1) return problems.front();
  if (constraint == ProblemConstraint::None) return problems[rng.uniform_index(problems.size())];
  const auto w = problem_weights(constraint, domain, problems, state, bkt);
  return problems[sample_weighted(w.normalized, rng)];
}

}  // namespace masterysim
