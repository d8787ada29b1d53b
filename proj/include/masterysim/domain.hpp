#pragma once

// Core vocabulary: skills, problems with their typical solution path,
// model parameters, experiment policy, and the per-learner knowledge state.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace masterysim {

using SkillIndex = std::size_t;
using ProblemIndex = std::size_t;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Skill {
  std::string id;
  SkillIndex index = 0;

  bool operator==(const Skill&) const = default;
};

// One step of a solution path. Skills are stored as dense indices into the
// owning Domain; ids are resolved at load time.
struct Step {
  std::vector<SkillIndex> skills;

  bool operator==(const Step&) const = default;
};

struct Problem {
  std::string id;
  std::vector<Step> steps;

  bool operator==(const Problem&) const = default;

  bool uses_skill(SkillIndex k) const {
    return std::any_of(steps.begin(), steps.end(), [k](const Step& s) {
      return std::find(s.skills.begin(), s.skills.end(), k) != s.skills.end();
    });
  }
};

class Domain {
 public:
  Domain() = default;

  // Skill indices follow the order of `skill_ids`.
  Domain(std::string name, const std::vector<std::string>& skill_ids, std::vector<Problem> problems)
      : name_(std::move(name)), problems_(std::move(problems)) {
    skills_.reserve(skill_ids.size());
    for (const auto& id : skill_ids) {
      by_id_.emplace(id, skills_.size());
      skills_.push_back(Skill{id, skills_.size()});
    }
    pools_.assign(skills_.size(), {});
    for (ProblemIndex p = 0; p < problems_.size(); ++p) {
      std::vector<SkillIndex> seen;
      for (const auto& step : problems_[p].steps)
        for (SkillIndex k : step.skills)
          if (k < skills_.size() && std::find(seen.begin(), seen.end(), k) == seen.end()) seen.push_back(k);
      for (SkillIndex k : seen) pools_[k].push_back(p);
    }
    for (auto& pool : pools_) std::sort(pool.begin(), pool.end());
  }

  const std::string& name() const noexcept { return name_; }
  const std::vector<Skill>& skills() const noexcept { return skills_; }
  const std::vector<Problem>& problems() const noexcept { return problems_; }
  std::size_t skill_count() const noexcept { return skills_.size(); }
  std::size_t problem_count() const noexcept { return problems_.size(); }

  const Skill& skill(SkillIndex k) const { return skills_.at(k); }
  const Problem& problem(ProblemIndex p) const { return problems_.at(p); }

  std::optional<SkillIndex> find_skill(std::string_view id) const {
    auto it = by_id_.find(std::string(id));
    if (it == by_id_.end()) return std::nullopt;
    return it->second;
  }

  // Problems containing skill k in any step, ascending index.
  const std::vector<ProblemIndex>& problems_with_skill(SkillIndex k) const { return pools_.at(k); }

  // Field-for-field equality; derived lookup tables follow from the fields.
  bool operator==(const Domain& other) const {
    return name_ == other.name_ && skills_ == other.skills_ && problems_ == other.problems_;
  }

 private:
  std::string name_;
  std::vector<Skill> skills_;
  std::vector<Problem> problems_;
  std::unordered_map<std::string, SkillIndex> by_id_;
  std::vector<std::vector<ProblemIndex>> pools_;
};

// Empty iff all Domain invariants hold.
inline std::vector<std::string> validate_domain(const Domain& domain) {
  std::vector<std::string> violations;
  const std::size_t k_count = domain.skill_count();

  std::unordered_map<std::string, int> id_counts;
  for (std::size_t i = 0; i < k_count; ++i) {
    const auto& s = domain.skills()[i];
    if (s.id.empty()) violations.push_back("skill at index " + std::to_string(i) + " has an empty id");
    if (s.index != i) violations.push_back("skill " + s.id + " has index " + std::to_string(s.index) +
                                           ", expected " + std::to_string(i));
    if (++id_counts[s.id] == 2) violations.push_back("duplicate skill id " + s.id);
  }
  if (k_count == 0) violations.push_back("domain has no skills");
  if (domain.problem_count() == 0) violations.push_back("domain has no problems");

  std::unordered_map<std::string, int> problem_ids;
  std::vector<bool> used(k_count, false);
  for (const auto& p : domain.problems()) {
    if (++problem_ids[p.id] == 2) violations.push_back("duplicate problem id " + p.id);
    if (p.steps.empty()) {
      violations.push_back("problem " + p.id + " has no steps");
      continue;
    }
    for (std::size_t s = 0; s < p.steps.size(); ++s) {
      const auto& step = p.steps[s];
      if (step.skills.empty())
        violations.push_back("problem " + p.id + " step " + std::to_string(s) + " has no skills");
      for (SkillIndex k : step.skills) {
        if (k >= k_count)
          violations.push_back("problem " + p.id + " step " + std::to_string(s) +
                               " references unknown skill index " + std::to_string(k));
        else
          used[k] = true;
      }
    }
  }
  for (std::size_t k = 0; k < k_count; ++k)
    if (!used[k]) violations.push_back("unused skill " + domain.skills()[k].id);
  return violations;
}

struct BktSkillParams {
  double p_init = 0.25;
  double p_learn = 0.22;
  double p_guess = 0.2;
  double p_slip = 0.1;

  bool operator==(const BktSkillParams&) const = default;
};

// TutorShop defaults shared by every skill unless per-skill overrides exist.
struct BktParams {
  BktSkillParams shared;
  std::vector<BktSkillParams> per_skill;  // empty, or one entry per skill

  const BktSkillParams& for_skill(SkillIndex k) const {
    return per_skill.empty() ? shared : per_skill.at(k);
  }

  bool operator==(const BktParams&) const = default;
};

inline std::vector<std::string> validate_bkt(const BktParams& bkt, std::size_t skill_count) {
  std::vector<std::string> out;
  auto check = [&out](const BktSkillParams& q, const std::string& where) {
    for (double v : {q.p_init, q.p_learn, q.p_guess, q.p_slip})
      if (!(v >= 0.0 && v <= 1.0)) {
        out.push_back(where + ": probability outside [0,1]");
        return;
      }
    if (!(q.p_guess + q.p_slip < 1.0)) out.push_back(where + ": p_guess + p_slip must be < 1");
  };
  check(bkt.shared, "shared");
  if (!bkt.per_skill.empty() && bkt.per_skill.size() != skill_count)
    out.push_back("per-skill BKT parameters do not match the skill count");
  for (std::size_t k = 0; k < bkt.per_skill.size(); ++k) check(bkt.per_skill[k], "skill " + std::to_string(k));
  return out;
}

// Population from which each simulated learner's ability is drawn.
struct AbilityDistribution {
  double mean = 0.0;
  double sd = 1.0;

  bool operator==(const AbilityDistribution&) const = default;
};

struct AfmParams {
  double intercept = 0.0;
  AbilityDistribution ability;
  std::vector<double> difficulty;   // beta per skill
  std::vector<double> learn_slope;  // gamma per skill, >= 0

  bool operator==(const AfmParams&) const = default;
};

inline std::vector<std::string> validate_afm(const AfmParams& afm, std::size_t skill_count) {
  std::vector<std::string> out;
  if (afm.difficulty.size() != skill_count) out.push_back("AFM difficulty count does not match the skill count");
  if (afm.learn_slope.size() != skill_count) out.push_back("AFM learn_slope count does not match the skill count");
  for (std::size_t k = 0; k < afm.learn_slope.size(); ++k)
    if (!(afm.learn_slope[k] >= 0.0)) out.push_back("negative learn_slope for skill " + std::to_string(k));
  if (!(afm.ability.sd >= 0.0)) out.push_back("ability sd must be >= 0");
  return out;
}

enum class Strategy {
  StrengthTargeting,
  WeaknessTargeting,
  Interleaving,
  Blocking,
  Random,
  MaxUsualImprovement,
  MaxUsualOutcome,
  MinWorstCaseLoss,
};

enum class SkillConstraint { None, CloserToMastery, FurtherFromMastery };
enum class ProblemConstraint { None, PreferEasier, PreferHarder };

inline constexpr Strategy kAllStrategies[] = {
    Strategy::StrengthTargeting, Strategy::WeaknessTargeting,   Strategy::Interleaving,
    Strategy::Blocking,          Strategy::Random,              Strategy::MaxUsualImprovement,
    Strategy::MaxUsualOutcome,   Strategy::MinWorstCaseLoss,
};
inline constexpr SkillConstraint kAllSkillConstraints[] = {
    SkillConstraint::None, SkillConstraint::CloserToMastery, SkillConstraint::FurtherFromMastery};
inline constexpr ProblemConstraint kAllProblemConstraints[] = {
    ProblemConstraint::None, ProblemConstraint::PreferEasier, ProblemConstraint::PreferHarder};

inline std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::StrengthTargeting: return "strength_targeting";
    case Strategy::WeaknessTargeting: return "weakness_targeting";
    case Strategy::Interleaving: return "interleaving";
    case Strategy::Blocking: return "blocking";
    case Strategy::Random: return "random";
    case Strategy::MaxUsualImprovement: return "max_usual_improvement";
    case Strategy::MaxUsualOutcome: return "max_usual_outcome";
    case Strategy::MinWorstCaseLoss: return "min_worst_case_loss";
  }
  return "unknown";
}

inline std::string_view to_string(SkillConstraint c) {
  switch (c) {
    case SkillConstraint::None: return "none";
    case SkillConstraint::CloserToMastery: return "closer_to_mastery";
    case SkillConstraint::FurtherFromMastery: return "further_from_mastery";
  }
  return "unknown";
}

inline std::string_view to_string(ProblemConstraint c) {
  switch (c) {
    case ProblemConstraint::None: return "none";
    case ProblemConstraint::PreferEasier: return "prefer_easier";
    case ProblemConstraint::PreferHarder: return "prefer_harder";
  }
  return "unknown";
}

// Canonical names plus short aliases ("strength", "weakness", "mwl", ...).
inline std::optional<Strategy> parse_strategy(std::string_view name) {
  for (Strategy s : kAllStrategies)
    if (name == to_string(s)) return s;
  static const std::pair<std::string_view, Strategy> aliases[] = {
      {"strength", Strategy::StrengthTargeting},   {"weakness", Strategy::WeaknessTargeting},
      {"interleave", Strategy::Interleaving},      {"block", Strategy::Blocking},
      {"max_usual", Strategy::MaxUsualImprovement}, {"high_usual", Strategy::MaxUsualOutcome},
      {"mwl", Strategy::MinWorstCaseLoss},
  };
  for (const auto& [alias, s] : aliases)
    if (name == alias) return s;
  return std::nullopt;
}

inline std::optional<SkillConstraint> parse_skill_constraint(std::string_view name) {
  for (SkillConstraint c : kAllSkillConstraints)
    if (name == to_string(c)) return c;
  if (name == "closer") return SkillConstraint::CloserToMastery;
  if (name == "further") return SkillConstraint::FurtherFromMastery;
  return std::nullopt;
}

inline std::optional<ProblemConstraint> parse_problem_constraint(std::string_view name) {
  for (ProblemConstraint c : kAllProblemConstraints)
    if (name == to_string(c)) return c;
  if (name == "easier") return ProblemConstraint::PreferEasier;
  if (name == "harder") return ProblemConstraint::PreferHarder;
  return std::nullopt;
}

// One experimental cell.
struct PolicyConfig {
  Strategy strategy = Strategy::WeaknessTargeting;
  SkillConstraint skill_constraint = SkillConstraint::None;
  ProblemConstraint problem_constraint = ProblemConstraint::None;
  double mastery_threshold = 0.95;
  std::size_t n_learners = 1000;
  std::size_t max_problems = 2000;
  std::uint64_t seed = 0;
  // Share of the skill pool a skill constraint retains (rounded up).
  double skill_constraint_fraction = 0.5;

  bool operator==(const PolicyConfig&) const = default;

  std::string describe() const {
    return std::string(to_string(strategy)) + "/" + std::string(to_string(skill_constraint)) + "/" +
           std::string(to_string(problem_constraint));
  }
};

inline void validate_policy(const PolicyConfig& policy) {
  if (!(policy.mastery_threshold > 0.5 && policy.mastery_threshold < 1.0))
    throw Error("mastery_threshold must lie in (0.5, 1)");
  if (policy.max_problems < 1) throw Error("max_problems must be >= 1");
  if (policy.n_learners < 1) throw Error("n_learners must be >= 1");
  if (!(policy.skill_constraint_fraction > 0.0 && policy.skill_constraint_fraction <= 1.0))
    throw Error("skill_constraint_fraction must lie in (0, 1]");
}

struct KnowledgeState {
  std::vector<double> mastery;
  std::vector<std::uint32_t> opportunities;
  std::vector<std::optional<std::uint32_t>> mastered_at;
  std::vector<std::uint32_t> success_count;

  KnowledgeState() = default;

  // Skills whose prior already meets the threshold are mastered at opportunity 0.
  KnowledgeState(std::size_t skill_count, const BktParams& bkt, double threshold)
      : mastery(skill_count), opportunities(skill_count, 0), mastered_at(skill_count),
        success_count(skill_count, 0) {
    for (SkillIndex k = 0; k < skill_count; ++k) {
      mastery[k] = bkt.for_skill(k).p_init;
      if (mastery[k] >= threshold) mastered_at[k] = 0;
    }
  }

  std::size_t skill_count() const noexcept { return mastery.size(); }
};

}  // namespace masterysim
