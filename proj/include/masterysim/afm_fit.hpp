#pragma once

// Penalised maximum-likelihood fit of the additive factors model.
//
// Parameter vector layout: [intercept, theta_0..theta_{S-1}, beta_0..beta_{K-1},
// gamma_0..gamma_{K-1}]. The objective is
//   sum_i [y_i z_i - log(1 + e^{z_i})] - (lambda / 2) * |w without intercept|^2
// with z_i = intercept + theta_s + sum_{k on step} (beta_k + gamma_k * T_sk) and
// T_sk the student's prior opportunities on k. gamma stays >= 0 by projection.

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "masterysim/domain.hpp"
#include "masterysim/ingestion.hpp"
#include "masterysim/rng.hpp"
#include "masterysim/student_model.hpp"

namespace masterysim {

struct AfmObservation {
  std::size_t student = 0;
  std::vector<SkillIndex> skills;
  std::vector<double> prior_counts;  // parallel to skills
  double correct = 0.0;              // 1 or 0
};

struct AfmData {
  std::vector<std::string> students;  // sorted ids
  std::size_t skill_count = 0;
  std::vector<AfmObservation> observations;
  std::size_t dropped = 0;  // transactions whose skills are not all in the domain

  std::size_t parameter_count() const { return 1 + students.size() + 2 * skill_count; }
  std::size_t theta_offset() const { return 1; }
  std::size_t beta_offset() const { return 1 + students.size(); }
  std::size_t gamma_offset() const { return 1 + students.size() + skill_count; }
};

// Opportunity counts accumulate per student and skill in row order. Hints
// count as incorrect.
inline AfmData build_afm_data(const std::vector<Transaction>& transactions, const Domain& domain) {
  AfmData data;
  data.skill_count = domain.skill_count();
  std::vector<const Transaction*> ordered;
  for (const auto& t : transactions) ordered.push_back(&t);
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const Transaction* a, const Transaction* b) { return a->row_index < b->row_index; });

  std::map<std::string, std::size_t> student_index;
  for (const Transaction* t : ordered) student_index.emplace(t->student_id, 0);
  for (auto& [id, i] : student_index) {
    i = data.students.size();
    data.students.push_back(id);
  }

  std::vector<std::vector<double>> counts(data.students.size(), std::vector<double>(data.skill_count, 0.0));
  for (const Transaction* t : ordered) {
    AfmObservation obs;
    obs.student = student_index.at(t->student_id);
    bool ok = true;
    for (const auto& id : t->skill_ids) {
      const auto k = domain.find_skill(id);
      if (!k) {
        ok = false;
        break;
      }
      if (std::find(obs.skills.begin(), obs.skills.end(), *k) == obs.skills.end()) obs.skills.push_back(*k);
    }
    if (!ok || obs.skills.empty()) {
      ++data.dropped;
      continue;
    }
    for (SkillIndex k : obs.skills) obs.prior_counts.push_back(counts[obs.student][k]);
    for (SkillIndex k : obs.skills) counts[obs.student][k] += 1.0;
    obs.correct = t->outcome == Outcome::Correct ? 1.0 : 0.0;
    data.observations.push_back(std::move(obs));
  }
  return data;
}

struct AfmFitOptions {
  double l2 = 1.0;
  double gradient_tolerance = 1e-5;
  std::size_t max_iterations = 5000;
  bool fix_learn_slope_zero = false;
};

namespace detail {

inline double afm_observation_logit(const AfmData& d, const AfmObservation& o, const std::vector<double>& w) {
  double z = w[0] + w[d.theta_offset() + o.student];
  for (std::size_t j = 0; j < o.skills.size(); ++j)
    z += w[d.beta_offset() + o.skills[j]] + w[d.gamma_offset() + o.skills[j]] * o.prior_counts[j];
  return z;
}

// log(1 + e^z) without overflow.
inline double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

}  // namespace detail

// Unpenalised Bernoulli log-likelihood.
inline double afm_log_likelihood(const AfmData& d, const std::vector<double>& w) {
  double ll = 0.0;
  for (const auto& o : d.observations) {
    const double z = detail::afm_observation_logit(d, o, w);
    ll += o.correct * z - detail::softplus(z);
  }
  return ll;
}

inline double afm_objective(const AfmData& d, const std::vector<double>& w, double l2) {
  double penalty = 0.0;
  for (std::size_t i = 1; i < w.size(); ++i) penalty += w[i] * w[i];
  return afm_log_likelihood(d, w) - 0.5 * l2 * penalty;
}

inline std::vector<double> afm_gradient(const AfmData& d, const std::vector<double>& w, double l2) {
  std::vector<double> g(w.size(), 0.0);
  for (const auto& o : d.observations) {
    const double r = o.correct - sigmoid(detail::afm_observation_logit(d, o, w));
    g[0] += r;
    g[d.theta_offset() + o.student] += r;
    for (std::size_t j = 0; j < o.skills.size(); ++j) {
      g[d.beta_offset() + o.skills[j]] += r;
      g[d.gamma_offset() + o.skills[j]] += r * o.prior_counts[j];
    }
  }
  for (std::size_t i = 1; i < w.size(); ++i) g[i] -= l2 * w[i];
  return g;
}

struct AfmFitReport {
  double log_likelihood = 0.0;
  double objective = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  // Every retained outcome is identical, so the unpenalised intercept runs
  // off until the gradient tolerance stops it.
  bool separation = false;
  double gradient_norm = 0.0;  // max-norm of the projected gradient
  std::size_t n_observations = 0;
  std::size_t n_students = 0;
  std::size_t dropped_transactions = 0;
};

struct AfmFit {
  AfmParams params;
  std::vector<double> theta;  // per student, order of AfmData::students
  std::vector<double> weights;
  AfmFitReport report;
};

namespace detail {

struct AfmProblem {
  const AfmData& data;
  const AfmFitOptions& options;

  bool pinned(std::size_t i) const { return options.fix_learn_slope_zero && i >= data.gamma_offset(); }
  bool nonneg(std::size_t i) const { return i >= data.gamma_offset(); }

  void project(std::vector<double>& w) const {
    for (std::size_t i = data.gamma_offset(); i < w.size(); ++i) w[i] = pinned(i) ? 0.0 : std::max(0.0, w[i]);
  }

  // Zero for coordinates held at a bound by the projection.
  double projected_norm(const std::vector<double>& w, const std::vector<double>& g) const {
    double m = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (pinned(i)) continue;
      if (nonneg(i) && w[i] <= 0.0 && g[i] < 0.0) continue;
      m = std::max(m, std::abs(g[i]));
    }
    return m;
  }
};

}  // namespace detail

inline AfmParams afm_params_from_weights(const AfmData& d, const std::vector<double>& w) {
  AfmParams p;
  p.intercept = w[0];
  std::vector<double> theta(w.begin() + static_cast<std::ptrdiff_t>(d.theta_offset()),
                            w.begin() + static_cast<std::ptrdiff_t>(d.beta_offset()));
  if (!theta.empty()) {
    double m = 0.0;
    for (double t : theta) m += t;
    m /= static_cast<double>(theta.size());
    double ss = 0.0;
    for (double t : theta) ss += (t - m) * (t - m);
    p.ability.mean = m;
    p.ability.sd = theta.size() > 1 ? std::sqrt(ss / static_cast<double>(theta.size() - 1)) : 0.0;
  }
  p.difficulty.assign(w.begin() + static_cast<std::ptrdiff_t>(d.beta_offset()),
                      w.begin() + static_cast<std::ptrdiff_t>(d.gamma_offset()));
  p.learn_slope.assign(w.begin() + static_cast<std::ptrdiff_t>(d.gamma_offset()), w.end());
  return p;
}

namespace detail {

// Per-coordinate bound on the objective's curvature: 1/4 per observation for
// intercept, theta and beta (counts squared for gamma), plus the penalty.
inline std::vector<double> curvature_bound(const AfmData& d, double l2) {
  std::vector<double> c(d.parameter_count(), 0.0);
  for (const auto& o : d.observations) {
    c[0] += 0.25;
    c[d.theta_offset() + o.student] += 0.25;
    for (std::size_t j = 0; j < o.skills.size(); ++j) {
      c[d.beta_offset() + o.skills[j]] += 0.25;
      c[d.gamma_offset() + o.skills[j]] += 0.25 * o.prior_counts[j] * o.prior_counts[j];
    }
  }
  for (std::size_t i = 1; i < c.size(); ++i) c[i] += l2;
  for (double& x : c) x = std::max(x, 1e-8);
  return c;
}

// Newton direction for the free coordinates (fixed ones get 0). The theta
// block of the Hessian is diagonal, so it is eliminated and only the
// (1 + 2K)-sized system for intercept, beta and gamma is factorised.
inline std::vector<double> newton_direction(const AfmData& d, const std::vector<double>& w,
                                            const std::vector<double>& g, double l2,
                                            const std::vector<bool>& fixed) {
  const std::size_t k_count = d.skill_count, s_count = d.students.size();
  const std::size_t m = 1 + 2 * k_count;
  auto a_index = [&](std::size_t i) { return i == 0 ? 0 : i - d.beta_offset() + 1; };

  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(s_count));
  Eigen::VectorXd diag = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(s_count), l2);
  std::vector<std::pair<Eigen::Index, double>> x;
  for (const auto& o : d.observations) {
    const double p = sigmoid(afm_observation_logit(d, o, w));
    const double v = p * (1.0 - p);
    x.assign(1, {0, 1.0});
    for (std::size_t j = 0; j < o.skills.size(); ++j) {
      x.push_back({static_cast<Eigen::Index>(1 + o.skills[j]), 1.0});
      x.push_back({static_cast<Eigen::Index>(1 + k_count + o.skills[j]), o.prior_counts[j]});
    }
    for (const auto& [i, xi] : x) {
      b(i, static_cast<Eigen::Index>(o.student)) += v * xi;
      for (const auto& [j, xj] : x) a(i, j) += v * xi * xj;
    }
    diag(static_cast<Eigen::Index>(o.student)) += v;
  }
  for (Eigen::Index i = 1; i < static_cast<Eigen::Index>(m); ++i) a(i, i) += l2;
  a(0, 0) += 1e-10;

  Eigen::VectorXd g_a(static_cast<Eigen::Index>(m)), g_t(static_cast<Eigen::Index>(s_count));
  g_a(0) = g[0];
  for (std::size_t i = d.beta_offset(); i < d.parameter_count(); ++i) g_a(static_cast<Eigen::Index>(a_index(i))) = g[i];
  for (std::size_t s = 0; s < s_count; ++s) g_t(static_cast<Eigen::Index>(s)) = g[d.theta_offset() + s];

  const Eigen::MatrixXd b_scaled = b * diag.cwiseInverse().asDiagonal();
  Eigen::MatrixXd schur = a - b_scaled * b.transpose();
  Eigen::VectorXd rhs = g_a - b_scaled * g_t;
  for (std::size_t i = d.gamma_offset(); i < d.parameter_count(); ++i) {
    if (!fixed[i]) continue;
    const auto r = static_cast<Eigen::Index>(a_index(i));
    schur.row(r).setZero();
    schur.col(r).setZero();
    schur(r, r) = 1.0;
    rhs(r) = 0.0;
  }
  const Eigen::VectorXd step_a = schur.ldlt().solve(rhs);
  const Eigen::VectorXd step_t = (g_t - b.transpose() * step_a).cwiseQuotient(diag);

  std::vector<double> out(d.parameter_count(), 0.0);
  out[0] = step_a(0);
  for (std::size_t s = 0; s < s_count; ++s) out[d.theta_offset() + s] = step_t(static_cast<Eigen::Index>(s));
  for (std::size_t i = d.beta_offset(); i < d.parameter_count(); ++i)
    out[i] = fixed[i] ? 0.0 : step_a(static_cast<Eigen::Index>(a_index(i)));
  for (double v : out)
    if (!std::isfinite(v)) return {};
  return out;
}

}  // namespace detail

// Projected ascent from zero. Each iteration tries the Newton direction and,
// failing that, the gradient scaled by a curvature bound; the step is halved
// until the objective does not decrease. Slopes stuck at 0 with a negative
// gradient are held fixed.
inline AfmFit fit_afm(const AfmData& data, const AfmFitOptions& options = {}) {
  if (data.observations.empty()) throw Error("fit_afm: no observations");
  const detail::AfmProblem problem{data, options};
  const std::vector<double> curvature = detail::curvature_bound(data, options.l2);
  std::vector<double> w(data.parameter_count(), 0.0);
  double f = afm_objective(data, w, options.l2);
  std::vector<double> g = afm_gradient(data, w, options.l2);

  AfmFit fit;
  fit.report.n_observations = data.observations.size();
  fit.report.n_students = data.students.size();
  fit.report.dropped_transactions = data.dropped;
  {
    const double first = data.observations.front().correct;
    fit.report.separation = std::all_of(data.observations.begin(), data.observations.end(),
                                        [first](const AfmObservation& o) { return o.correct == first; });
  }

  std::size_t it = 0;
  double norm = problem.projected_norm(w, g);
  std::vector<bool> fixed(w.size(), false);
  std::vector<double> next(w.size());
  while (norm >= options.gradient_tolerance && it < options.max_iterations) {
    for (std::size_t i = data.gamma_offset(); i < w.size(); ++i)
      fixed[i] = problem.pinned(i) || (w[i] <= 0.0 && g[i] <= 0.0);

    std::vector<double> scaled(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) scaled[i] = fixed[i] ? 0.0 : g[i] / curvature[i];
    std::vector<std::vector<double>> directions;
    if (auto newton = detail::newton_direction(data, w, g, options.l2, fixed); !newton.empty())
      directions.push_back(std::move(newton));
    directions.push_back(std::move(scaled));

    bool moved = false;
    double f_next = f;
    for (const auto& dir : directions) {
      double t = 1.0;
      for (int halvings = 0; halvings < 60 && !moved; ++halvings, t *= 0.5) {
        for (std::size_t i = 0; i < w.size(); ++i) next[i] = w[i] + t * dir[i];
        problem.project(next);
        f_next = afm_objective(data, next, options.l2);
        moved = f_next >= f && next != w;
      }
      if (moved) break;
    }
    ++it;
    if (!moved) break;  // no ascent left at machine precision
    w = next;
    f = f_next;
    g = afm_gradient(data, w, options.l2);
    norm = problem.projected_norm(w, g);
  }

  fit.report.iterations = it;
  fit.report.gradient_norm = norm;
  fit.report.converged = norm < options.gradient_tolerance;
  fit.report.objective = f;
  fit.report.log_likelihood = afm_log_likelihood(data, w);
  fit.params = afm_params_from_weights(data, w);
  fit.theta.assign(w.begin() + static_cast<std::ptrdiff_t>(data.theta_offset()),
                   w.begin() + static_cast<std::ptrdiff_t>(data.beta_offset()));
  fit.weights = std::move(w);
  return fit;
}

inline AfmFit fit_afm(const std::vector<Transaction>& transactions, const Domain& domain,
                      const AfmFitOptions& options = {}) {
  return fit_afm(build_afm_data(transactions, domain), options);
}

// Simulated single-skill transaction log drawn from known AFM parameters:
// each student answers `opportunities` steps, each on a uniformly drawn skill.
struct AfmSampleSpec {
  std::size_t students = 500;
  std::size_t opportunities = 50;
  std::uint64_t seed = 1;
};

inline std::vector<Transaction> sample_afm_transactions(const AfmParams& truth, const Domain& domain,
                                                         const AfmSampleSpec& spec) {
  Rng rng(spec.seed);
  std::vector<Transaction> out;
  const std::size_t k_count = domain.skill_count();
  const std::size_t width = std::to_string(spec.students).size();
  std::size_t row = 0;
  for (std::size_t s = 0; s < spec.students; ++s) {
    std::string digits = std::to_string(s);
    const std::string student = "stu" + std::string(width - digits.size(), '0') + digits;
    const double theta = rng.normal(truth.ability.mean, truth.ability.sd);
    std::vector<double> counts(k_count, 0.0);
    for (std::size_t o = 0; o < spec.opportunities; ++o) {
      const SkillIndex k = rng.uniform_index(k_count);
      const SkillIndex only[1] = {k};
      const double p = afm_predict(truth, theta, std::span<const SkillIndex>(only), counts);
      Transaction t;
      t.student_id = student;
      t.problem_id = "practice";
      t.step_id = "step" + std::to_string(o);
      t.skill_ids = {domain.skill(k).id};
      t.outcome = rng.bernoulli(p) ? Outcome::Correct : Outcome::Incorrect;
      t.row_index = row++;
      out.push_back(std::move(t));
      counts[k] += 1.0;
    }
  }
  return out;
}

}  // namespace masterysim
