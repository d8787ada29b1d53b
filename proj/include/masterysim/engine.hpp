#pragma once

// The problem-level decision cycle, run independently for each simulated learner:
//   constrain skills -> (project outcomes) -> pick skill -> pick problem
//   -> simulate every step -> repeat until all skills are mastered or capped.

#include <atomic>
#include <exception>
#include <mutex>
#include <numeric>
#include <span>
#include <thread>
#include <vector>

#include "masterysim/constraints.hpp"
#include "masterysim/domain.hpp"
#include "masterysim/rng.hpp"
#include "masterysim/strategies.hpp"
#include "masterysim/student_model.hpp"

namespace masterysim {

struct TraceEvent {
  std::size_t learner_id = 0;
  std::size_t problem_seq = 0;
  ProblemIndex problem = 0;
  std::size_t step_index = 0;
  std::vector<SkillIndex> skills;
  bool correct = false;
  std::vector<double> post_mastery;  // parallel to `skills`
  SkillIndex selected_skill = 0;
  bool selected_was_mastered = false;
};

struct LearnerResult {
  std::size_t learner_id = 0;
  double ability = 0.0;
  std::vector<std::uint32_t> opportunities;
  std::vector<std::optional<std::uint32_t>> mastered_at;
  std::vector<double> final_mastery;
  std::size_t total_problems = 0;
  bool completed = false;

  bool operator==(const LearnerResult&) const = default;
};

struct LearnerRun {
  LearnerResult result;
  std::vector<TraceEvent> trace;
};

class EngineError : public Error {
 public:
  EngineError(std::size_t learner, const std::string& what)
      : Error("learner " + std::to_string(learner) + ": " + what), learner_(learner) {}
  std::size_t learner() const noexcept { return learner_; }

 private:
  std::size_t learner_;
};

inline void check_inputs(const Domain& domain, const PolicyConfig& policy, const AfmParams& afm,
                         const BktParams& bkt) {
  validate_policy(policy);
  auto problems = validate_domain(domain);
  auto more = validate_afm(afm, domain.skill_count());
  problems.insert(problems.end(), more.begin(), more.end());
  more = validate_bkt(bkt, domain.skill_count());
  problems.insert(problems.end(), more.begin(), more.end());
  if (!problems.empty()) {
    std::string msg = "invalid simulation inputs:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw Error(msg);
  }
}

// Inputs are assumed valid (see check_inputs).
inline LearnerRun run_learner(const Domain& domain, const PolicyConfig& policy, const AfmParams& afm,
                              const BktParams& bkt, std::size_t learner_id, std::uint64_t learner_seed,
                              bool record_trace = false) {
  Rng rng(learner_seed);
  const std::size_t k_count = domain.skill_count();
  const double threshold = policy.mastery_threshold;

  LearnerRun run;
  LearnerResult& result = run.result;
  result.learner_id = learner_id;
  result.ability = rng.normal(afm.ability.mean, afm.ability.sd);

  KnowledgeState state(k_count, bkt, threshold);
  StrategyMemory memory;
  std::vector<SkillIndex> all_skills(k_count);
  std::iota(all_skills.begin(), all_skills.end(), SkillIndex{0});
  std::vector<OutcomeProjection> projections;

  for (;;) {
    const bool any_unmastered =
        std::any_of(state.mastery.begin(), state.mastery.end(), [&](double m) { return m < threshold; });
    if (!any_unmastered) {
      result.completed = true;
      break;
    }
    if (result.total_problems >= policy.max_problems) break;

    const auto candidates = apply_skill_constraint(policy.skill_constraint, state.mastery, all_skills, threshold,
                                                   policy.skill_constraint_fraction);
    projections.clear();
    if (needs_projections(policy.strategy))
      for (SkillIndex k : candidates) projections.push_back(project_outcomes(state, k, afm, result.ability, bkt));

    const SkillIndex chosen =
        select_skill(policy.strategy, state.mastery, candidates, projections, threshold, rng, memory);
    const bool chosen_mastered = state.mastery[chosen] >= threshold;

    const auto& pool = domain.problems_with_skill(chosen);
    if (pool.empty()) throw EngineError(learner_id, "no problem contains skill " + domain.skill(chosen).id);
    const ProblemIndex p = apply_problem_constraint(policy.problem_constraint, domain, pool, state, bkt, rng);

    const Problem& problem = domain.problem(p);
    for (std::size_t s = 0; s < problem.steps.size(); ++s) {
      const Step& step = problem.steps[s];
      const StepOutcome outcome = simulate_step(state, step, afm, result.ability, bkt, threshold, rng);
      if (record_trace) {
        TraceEvent ev;
        ev.learner_id = learner_id;
        ev.problem_seq = result.total_problems;
        ev.problem = p;
        ev.step_index = s;
        ev.skills = step.skills;
        ev.correct = outcome.correct;
        for (SkillIndex k : step.skills) ev.post_mastery.push_back(state.mastery[k]);
        ev.selected_skill = chosen;
        ev.selected_was_mastered = chosen_mastered;
        run.trace.push_back(std::move(ev));
      }
    }
    ++result.total_problems;
  }

  result.opportunities = state.opportunities;
  result.mastered_at = state.mastered_at;
  result.final_mastery = state.mastery;
  return run;
}

struct ExperimentOptions {
  std::size_t workers = 1;
  bool record_trace = false;
};

// Learner i uses split_seed(policy.seed, i); output order is by learner index
// regardless of the worker count.
inline std::vector<LearnerRun> run_experiment(const Domain& domain, const PolicyConfig& policy, const AfmParams& afm,
                                              const BktParams& bkt, const ExperimentOptions& options = {}) {
  check_inputs(domain, policy, afm, bkt);
  const std::size_t n = policy.n_learners;
  std::vector<LearnerRun> runs(n);
  std::vector<std::exception_ptr> errors(n);

  auto work = [&](std::size_t i) {
    try {
      runs[i] = run_learner(domain, policy, afm, bkt, i, split_seed(policy.seed, i), options.record_trace);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };

  const std::size_t workers = std::clamp<std::size_t>(options.workers, 1, n);
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) work(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) work(i);
      });
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (!errors[i]) continue;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const EngineError&) {
      throw;
    } catch (const std::exception& e) {
      throw EngineError(i, e.what());
    }
  }
  return runs;
}

inline std::vector<LearnerResult> results_of(std::vector<LearnerRun> runs) {
  std::vector<LearnerResult> out;
  out.reserve(runs.size());
  for (auto& r : runs) out.push_back(std::move(r.result));
  return out;
}

}  // namespace masterysim
