#pragma once

// Synthetic domains that match a dataset's problem/skill counts and the
// mean/SD of distinct skills per problem.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "masterysim/domain.hpp"
#include "masterysim/rng.hpp"

namespace masterysim {

struct SyntheticSpec {
  std::string name = "synthetic";
  std::size_t n_skills = 10;
  std::size_t n_problems = 58;
  double skills_per_problem_mean = 5.67;
  double skills_per_problem_sd = 2.47;
  // Probability that a step exercises two skills instead of one.
  double two_skill_step_prob = 0.25;
  // Skill popularity follows 1 / rank^skew over a seeded ranking; 0 is uniform.
  double popularity_skew = 0.0;
  // The last `rare_skills` skills of the ranking have their weight scaled by
  // `rare_skill_weight`, so they show up in only a handful of problems.
  std::size_t rare_skills = 0;
  double rare_skill_weight = 1.0;
  std::uint64_t seed = 7;

  bool operator==(const SyntheticSpec&) const = default;
};

inline void validate_synthetic_spec(const SyntheticSpec& spec) {
  if (spec.n_skills < 1) throw Error("synthetic spec: n_skills must be >= 1");
  if (spec.n_problems < spec.n_skills) throw Error("synthetic spec: n_problems must be >= n_skills");
  if (!(spec.skills_per_problem_sd >= 0.0)) throw Error("synthetic spec: skills_per_problem_sd must be >= 0");
  if (!(spec.two_skill_step_prob >= 0.0 && spec.two_skill_step_prob <= 1.0))
    throw Error("synthetic spec: two_skill_step_prob must lie in [0, 1]");
  if (!(spec.popularity_skew >= 0.0)) throw Error("synthetic spec: popularity_skew must be >= 0");
  if (spec.rare_skills >= spec.n_skills && spec.rare_skills > 0)
    throw Error("synthetic spec: rare_skills must be below n_skills");
  if (!(spec.rare_skill_weight > 0.0 && spec.rare_skill_weight <= 1.0))
    throw Error("synthetic spec: rare_skill_weight must lie in (0, 1]");
}

inline std::string synthetic_skill_id(std::size_t k, std::size_t n) {
  const std::size_t width = std::to_string(n > 0 ? n - 1 : 0).size();
  std::string digits = std::to_string(k);
  return "S" + std::string(width - std::min(width, digits.size()), '0') + digits;
}

namespace detail {

// rank[r] is the skill at popularity rank r (0 = most popular).
inline std::vector<SkillIndex> popularity_ranking(Rng& rng, std::size_t k_count) {
  std::vector<SkillIndex> rank(k_count);
  std::iota(rank.begin(), rank.end(), SkillIndex{0});
  for (std::size_t i = k_count; i-- > 1;) std::swap(rank[i], rank[rng.uniform_index(i + 1)]);
  return rank;
}

}  // namespace detail

// Skills given the reduced rare weight, ascending index.
inline std::vector<SkillIndex> synthetic_rare_skills(const SyntheticSpec& spec) {
  validate_synthetic_spec(spec);
  Rng rng(spec.seed);
  const auto rank = detail::popularity_ranking(rng, spec.n_skills);
  std::vector<SkillIndex> out(rank.end() - static_cast<std::ptrdiff_t>(spec.rare_skills), rank.end());
  std::sort(out.begin(), out.end());
  return out;
}

inline Domain generate_synthetic(const SyntheticSpec& spec) {
  validate_synthetic_spec(spec);
  Rng rng(spec.seed);
  const std::size_t k_count = spec.n_skills;

  // Popularity weights over a seeded ranking of skills.
  const auto rank = detail::popularity_ranking(rng, k_count);
  std::vector<double> popularity(k_count);
  for (std::size_t r = 0; r < k_count; ++r)
    popularity[rank[r]] = (r + spec.rare_skills >= k_count ? spec.rare_skill_weight : 1.0) /
                          std::pow(static_cast<double>(r + 1), spec.popularity_skew);

  std::vector<std::vector<SkillIndex>> chosen(spec.n_problems);
  for (auto& skills : chosen) {
    const double draw = rng.normal(spec.skills_per_problem_mean, spec.skills_per_problem_sd);
    const auto count = static_cast<std::size_t>(std::clamp(std::lround(draw), 1L, static_cast<long>(k_count)));
    std::vector<double> w = popularity;
    for (std::size_t c = 0; c < count; ++c) {
      double total = 0.0;
      for (double x : w) total += x;
      double u = rng.uniform() * total;
      std::size_t pick = k_count - 1;
      for (std::size_t k = 0; k < k_count; ++k) {
        if (w[k] <= 0.0) continue;
        if (u < w[k]) {
          pick = k;
          break;
        }
        u -= w[k];
      }
      while (w[pick] <= 0.0) pick = (pick + k_count - 1) % k_count;
      skills.push_back(pick);
      w[pick] = 0.0;
    }
  }

  // Coverage repair: hand each unused skill an occurrence of a skill that is
  // used by more than one problem, keeping every problem's skill count.
  std::vector<std::size_t> uses(k_count, 0);
  for (const auto& skills : chosen)
    for (SkillIndex k : skills) ++uses[k];
  for (SkillIndex missing = 0; missing < k_count; ++missing) {
    if (uses[missing] > 0) continue;
    bool repaired = false;
    for (std::size_t p = 0; p < chosen.size() && !repaired; ++p) {
      // Prefer replacing the most over-represented skill in problem p.
      std::size_t best_slot = chosen[p].size();
      for (std::size_t slot = 0; slot < chosen[p].size(); ++slot) {
        const SkillIndex k = chosen[p][slot];
        if (uses[k] > 1 && (best_slot == chosen[p].size() || uses[k] > uses[chosen[p][best_slot]])) best_slot = slot;
      }
      if (best_slot == chosen[p].size()) continue;
      --uses[chosen[p][best_slot]];
      chosen[p][best_slot] = missing;
      ++uses[missing];
      repaired = true;
    }
    if (!repaired) throw Error("synthetic generator: coverage repair failed");
  }

  std::vector<Problem> problems;
  problems.reserve(spec.n_problems);
  for (std::size_t p = 0; p < chosen.size(); ++p) {
    auto& skills = chosen[p];
    for (std::size_t i = skills.size(); i-- > 1;) std::swap(skills[i], skills[rng.uniform_index(i + 1)]);
    Problem problem;
    problem.id = "P" + synthetic_skill_id(p, spec.n_problems).substr(1);
    for (std::size_t i = 0; i < skills.size();) {
      Step step;
      step.skills.push_back(skills[i++]);
      if (i < skills.size() && rng.bernoulli(spec.two_skill_step_prob)) step.skills.push_back(skills[i++]);
      problem.steps.push_back(std::move(step));
    }
    problems.push_back(std::move(problem));
  }

  std::vector<std::string> ids;
  for (std::size_t k = 0; k < k_count; ++k) ids.push_back(synthetic_skill_id(k, k_count));
  return Domain(spec.name, ids, std::move(problems));
}

// Mean and sample SD of distinct skills per problem.
inline std::pair<double, double> skills_per_problem_moments(const Domain& domain) {
  std::vector<double> counts;
  for (const auto& p : domain.problems()) {
    std::vector<SkillIndex> distinct;
    for (const auto& s : p.steps)
      for (SkillIndex k : s.skills)
        if (std::find(distinct.begin(), distinct.end(), k) == distinct.end()) distinct.push_back(k);
    counts.push_back(static_cast<double>(distinct.size()));
  }
  if (counts.empty()) return {0.0, 0.0};
  double m = 0.0;
  for (double c : counts) m += c;
  m /= static_cast<double>(counts.size());
  double ss = 0.0;
  for (double c : counts) ss += (c - m) * (c - m);
  return {m, counts.size() > 1 ? std::sqrt(ss / static_cast<double>(counts.size() - 1)) : 0.0};
}

}  // namespace masterysim
