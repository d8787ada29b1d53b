#pragma once

// Overpractice is practice a skill receives after its mastery estimate first
// reached the threshold.

#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "masterysim/domain.hpp"
#include "masterysim/engine.hpp"

namespace masterysim {

inline double mean(std::span<const double> xs) {
  if (xs.empty()) throw Error("mean of an empty sample");
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

// Sample (n - 1) standard deviation; 0 for a single value.
inline double sample_sd(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

struct SkillOverpractice {
  std::size_t mastered_skills = 0;
  double total = 0.0;  // summed over mastered skills
};

inline SkillOverpractice overpractice_tally(const LearnerResult& result) {
  SkillOverpractice t;
  for (std::size_t k = 0; k < result.mastered_at.size(); ++k) {
    if (!result.mastered_at[k]) continue;
    ++t.mastered_skills;
    t.total += static_cast<double>(result.opportunities[k]) - static_cast<double>(*result.mastered_at[k]);
  }
  return t;
}

// Mean over mastered skills of (opportunities - mastered_at); 0 if none mastered.
inline double overpractice(const LearnerResult& result) {
  const auto t = overpractice_tally(result);
  return t.mastered_skills == 0 ? 0.0 : t.total / static_cast<double>(t.mastered_skills);
}

struct SkillBreakdown {
  double mean_before_mastery = 0.0;  // mean mastered_at over learners who mastered the skill
  double mean_after_mastery = 0.0;   // mean overpractice on the skill over the same learners
  std::size_t learners_mastered = 0;
};

struct CellSummary {
  PolicyConfig policy;
  std::size_t n_learners = 0;
  double mean_overpractice = 0.0;  // headline: mean of per-learner overpractice
  double sd_overpractice = 0.0;
  // Pooled view: mean over every (learner, mastered skill) pair.
  double mean_overpractice_per_skill = 0.0;
  double completion_rate = 0.0;
  double mean_problems = 0.0;
  std::size_t learners_without_mastery = 0;  // contributed 0 to the mean
  std::vector<SkillBreakdown> per_skill;
};

inline CellSummary summarize_cell(std::span<const LearnerResult> results, const PolicyConfig& policy) {
  if (results.empty()) throw Error("summarize_cell: no learner results");
  CellSummary s;
  s.policy = policy;
  s.n_learners = results.size();
  const std::size_t k_count = results.front().opportunities.size();
  s.per_skill.assign(k_count, {});

  std::vector<double> per_learner;
  per_learner.reserve(results.size());
  double pooled_total = 0.0;
  std::size_t pooled_count = 0, completed = 0, problems = 0;
  for (const auto& r : results) {
    const auto t = overpractice_tally(r);
    per_learner.push_back(t.mastered_skills == 0 ? 0.0 : t.total / static_cast<double>(t.mastered_skills));
    if (t.mastered_skills == 0) ++s.learners_without_mastery;
    pooled_total += t.total;
    pooled_count += t.mastered_skills;
    completed += r.completed ? 1 : 0;
    problems += r.total_problems;
    for (std::size_t k = 0; k < k_count && k < r.mastered_at.size(); ++k) {
      if (!r.mastered_at[k]) continue;
      auto& b = s.per_skill[k];
      ++b.learners_mastered;
      b.mean_before_mastery += *r.mastered_at[k];
      b.mean_after_mastery += static_cast<double>(r.opportunities[k]) - *r.mastered_at[k];
    }
  }
  for (auto& b : s.per_skill)
    if (b.learners_mastered > 0) {
      b.mean_before_mastery /= static_cast<double>(b.learners_mastered);
      b.mean_after_mastery /= static_cast<double>(b.learners_mastered);
    }
  s.mean_overpractice = mean(per_learner);
  s.sd_overpractice = sample_sd(per_learner);
  s.mean_overpractice_per_skill = pooled_count == 0 ? 0.0 : pooled_total / static_cast<double>(pooled_count);
  s.completion_rate = static_cast<double>(completed) / static_cast<double>(results.size());
  s.mean_problems = static_cast<double>(problems) / static_cast<double>(results.size());
  return s;
}

inline std::vector<double> overpractice_values(std::span<const LearnerResult> results) {
  std::vector<double> out;
  out.reserve(results.size());
  for (const auto& r : results) out.push_back(overpractice(r));
  return out;
}

// Standardized mean difference with pooled SD; nullopt when the pooled SD is 0.
inline std::optional<double> cohens_d(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw Error("cohens_d: each group needs at least two values");
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  const double va = sample_sd(a), vb = sample_sd(b);
  const double pooled = std::sqrt(((na - 1) * va * va + (nb - 1) * vb * vb) / (na + nb - 2));
  if (!(pooled > 0.0)) return std::nullopt;
  return (mean(a) - mean(b)) / pooled;
}

}  // namespace masterysim
