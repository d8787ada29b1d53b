#pragma once

// Command-line front end: simulate, fit, compare, generate-domain, validate.
// Exit status 0 on success, 2 for invalid configuration or input, 1 when a
// simulation run aborts.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "masterysim/afm_fit.hpp"
#include "masterysim/engine.hpp"
#include "masterysim/ingestion.hpp"
#include "masterysim/io.hpp"
#include "masterysim/metrics.hpp"
#include "masterysim/presets.hpp"
#include "masterysim/synthetic.hpp"
#include "masterysim/tables.hpp"

namespace masterysim {

// Experiment settings for `simulate`; also the config-file schema.
struct ExperimentConfig {
  std::string preset = "equation-solving-like";
  std::string domain_file;  // overrides preset when set
  std::string afm_file;     // otherwise the preset's parameters
  std::string bkt_file;     // otherwise shared defaults
  std::vector<std::string> strategies = {"all"};
  std::vector<std::string> skill_constraints = {"all"};
  std::vector<std::string> problem_constraints = {"all"};
  std::size_t n_learners = 1000;
  double mastery_threshold = 0.95;
  std::size_t max_problems = 2000;
  std::uint64_t seed = 1;
  double skill_constraint_fraction = 0.5;
  std::string output_dir = "results";
  std::size_t workers = 1;
  bool learner_results = true;
  bool trace = false;
  std::string trace_file = "trace.tsv.gz";

  bool operator==(const ExperimentConfig&) const = default;

  // Fields that determine the results; workers and output locations are excluded.
  std::string canonical() const {
    auto join = [](const std::vector<std::string>& v) {
      std::string s;
      for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i];
      return s;
    };
    std::ostringstream o;
    o << "preset=" << preset << "\ndomain=" << domain_file << "\nafm=" << afm_file << "\nbkt=" << bkt_file
      << "\nstrategies=" << join(strategies) << "\nskill_constraints=" << join(skill_constraints)
      << "\nproblem_constraints=" << join(problem_constraints) << "\nn_learners=" << n_learners
      << "\nmastery_threshold=" << exact_double(mastery_threshold) << "\nmax_problems=" << max_problems
      << "\nseed=" << seed << "\nskill_constraint_fraction=" << exact_double(skill_constraint_fraction) << "\n";
    return o.str();
  }
};

namespace cli_detail {

struct Invalid : Error {
  using Error::Error;
};

template <class T, class Parse, class All>
std::vector<T> expand(const std::vector<std::string>& names, Parse parse, const All& all, const char* what) {
  std::vector<T> out;
  for (const auto& n : names) {
    if (n == "all") {
      out.insert(out.end(), std::begin(all), std::end(all));
      continue;
    }
    const auto v = parse(n);
    if (!v) throw Invalid(std::string("unknown ") + what + " \"" + n + "\"");
    out.push_back(*v);
  }
  std::vector<T> unique;
  for (T v : out)
    if (std::find(unique.begin(), unique.end(), v) == unique.end()) unique.push_back(v);
  if (unique.empty()) throw Invalid(std::string("empty ") + what + " list");
  return unique;
}

struct Inputs {
  Domain domain;
  AfmParams afm;
  BktParams bkt;
};

inline Inputs load_inputs(const std::string& preset_name, const std::string& domain_file, const std::string& afm_file,
                          const std::string& bkt_file) {
  Inputs in;
  std::optional<Preset> preset;
  if (domain_file.empty()) {
    preset = find_preset(preset_name);
    if (!preset) throw Invalid("unknown preset \"" + preset_name + "\"");
    in.domain = preset_domain(*preset);
  } else {
    in.domain = domain_from_json(read_json_file(domain_file));
  }
  if (!afm_file.empty()) {
    in.afm = afm_from_json(read_json_file(afm_file), in.domain);
  } else if (preset) {
    in.afm = preset_afm(*preset);
  } else {
    throw Invalid("--afm is required with --domain");
  }
  if (!bkt_file.empty()) in.bkt = bkt_from_json(read_json_file(bkt_file), in.domain);
  return in;
}

inline std::string quote(const std::string& s) {
  return s.find('"') == std::string::npos ? "\"" + s + "\"" : "'" + s + "'";
}

// INI text that --config reads back to the same settings.
inline std::string config_text(const ExperimentConfig& c) {
  auto list = [](const std::vector<std::string>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + quote(v[i]);
    return s + "]";
  };
  std::ostringstream o;
  o << "[simulate]\n"
    << "preset=" << quote(c.preset) << "\n"
    << "domain=" << quote(c.domain_file) << "\n"
    << "afm=" << quote(c.afm_file) << "\n"
    << "bkt=" << quote(c.bkt_file) << "\n"
    << "strategies=" << list(c.strategies) << "\n"
    << "skill-constraints=" << list(c.skill_constraints) << "\n"
    << "problem-constraints=" << list(c.problem_constraints) << "\n"
    << "n-learners=" << c.n_learners << "\n"
    << "threshold=" << exact_double(c.mastery_threshold) << "\n"
    << "max-problems=" << c.max_problems << "\n"
    << "seed=" << c.seed << "\n"
    << "skill-constraint-fraction=" << exact_double(c.skill_constraint_fraction) << "\n"
    << "out=" << quote(c.output_dir) << "\n"
    << "workers=" << c.workers << "\n"
    << "learner-results=" << (c.learner_results ? "true" : "false") << "\n"
    << "trace=" << (c.trace ? "true" : "false") << "\n"
    << "trace-file=" << quote(c.trace_file) << "\n";
  return o.str();
}

// CLI11 only reads config files at the top level, so `simulate --config F`
// is moved in front of the subcommand.
inline std::vector<std::string> hoist_config(std::vector<std::string> args) {
  std::vector<std::string> front;
  for (std::size_t i = 0; i < args.size();) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      front.insert(front.end(), {args[i], args[i + 1]});
      args.erase(args.begin() + i, args.begin() + i + 2);
    } else if (args[i].rfind("--config=", 0) == 0) {
      front.push_back(args[i]);
      args.erase(args.begin() + i);
    } else {
      ++i;
    }
  }
  front.insert(front.end(), args.begin(), args.end());
  return front;
}

inline std::string cell_key(Strategy s, SkillConstraint c, ProblemConstraint p) {
  return std::string(to_string(s)) + "/" + std::string(to_string(c)) + "/" + std::string(to_string(p));
}

// "mwl/closer/none" or any alias spelling -> canonical key.
inline std::string parse_cell(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  for (std::string p; std::getline(ss, p, '/');) parts.push_back(p);
  if (parts.size() != 3) throw Invalid("cell \"" + text + "\" must look like strategy/skill_constraint/problem_constraint");
  const auto s = parse_strategy(parts[0]);
  const auto c = parse_skill_constraint(parts[1]);
  const auto p = parse_problem_constraint(parts[2]);
  if (!s || !c || !p) throw Invalid("cell \"" + text + "\" names an unknown strategy or constraint");
  return cell_key(*s, *c, *p);
}

inline int run_simulate(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err) {
  const auto strategies = expand<Strategy>(cfg.strategies, parse_strategy, kAllStrategies, "strategy");
  const auto skill_cs =
      expand<SkillConstraint>(cfg.skill_constraints, parse_skill_constraint, kAllSkillConstraints, "skill constraint");
  const auto problem_cs = expand<ProblemConstraint>(cfg.problem_constraints, parse_problem_constraint,
                                                    kAllProblemConstraints, "problem constraint");
  const Inputs in = load_inputs(cfg.preset, cfg.domain_file, cfg.afm_file, cfg.bkt_file);

  std::vector<PolicyConfig> cells;
  for (Strategy s : strategies)
    for (SkillConstraint c : skill_cs)
      for (ProblemConstraint p : problem_cs) {
        PolicyConfig pol;
        pol.strategy = s;
        pol.skill_constraint = c;
        pol.problem_constraint = p;
        pol.mastery_threshold = cfg.mastery_threshold;
        pol.n_learners = cfg.n_learners;
        pol.max_problems = cfg.max_problems;
        pol.seed = cfg.seed;
        pol.skill_constraint_fraction = cfg.skill_constraint_fraction;
        cells.push_back(pol);
      }
  try {
    check_inputs(in.domain, cells.front(), in.afm, in.bkt);
  } catch (const Error& e) {
    throw Invalid(e.what());
  }

  std::error_code ec;
  std::filesystem::create_directories(cfg.output_dir, ec);
  if (ec) throw Invalid("cannot create output directory " + cfg.output_dir + ": " + ec.message());
  const Provenance prov{hex64(fnv1a64(cfg.canonical())), cfg.seed};
  const std::filesystem::path dir(cfg.output_dir);

  std::optional<TextOutput> learners, trace;
  if (cfg.learner_results) {
    learners.emplace((dir / "learners.tsv").string());
    learners->write(prov.header() + learner_table_header());
  }
  if (cfg.trace) {
    trace.emplace((dir / cfg.trace_file).string());
    trace->write(prov.header());
  }

  std::vector<CellSummary> summaries;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto& pol = cells[i];
    std::vector<LearnerRun> runs;
    try {
      runs = run_experiment(in.domain, pol, in.afm, in.bkt, {cfg.workers, cfg.trace});
    } catch (const EngineError& e) {
      err << "error: cell " << pol.describe() << ": " << e.what() << "\n";
      return 1;
    }
    if (trace) {
      trace->write("# cell " + pol.describe() + "\n" + trace_header());
      for (const auto& r : runs) trace->write(trace_rows(in.domain, r.trace));
    }
    auto results = results_of(std::move(runs));
    summaries.push_back(summarize_cell(results, pol));
    if (learners) learners->write(learner_rows(pol, results));
  }
  if (learners) learners->close();
  if (trace) trace->close();
  write_text_file((dir / "summary.tsv").string(), summary_table(summaries, prov));

  out << "domain " << in.domain.name() << ": " << in.domain.skill_count() << " skills, " << in.domain.problem_count()
      << " problems; " << cfg.n_learners << " learners per cell, seed " << cfg.seed << "\n";
  out << console_table(summaries);
  for (const auto& s : summaries)
    if (s.learners_without_mastery > 0)
      out << "warning: " << s.policy.describe() << ": " << s.learners_without_mastery
          << " learner(s) mastered no skill and count as 0\n";
  out << "wrote " << (dir / "summary.tsv").string() << "\n";
  return 0;
}

inline Json fit_report_json(const AfmFitReport& r, const ParseResult& parsed, const ExtractedDomain& extracted) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["log_likelihood"] = r.log_likelihood;
  j["penalized_objective"] = r.objective;
  j["iterations"] = r.iterations;
  j["converged"] = r.converged;
  j["separation"] = r.separation;
  j["gradient_max_norm"] = r.gradient_norm;
  j["observations"] = r.n_observations;
  j["students"] = r.n_students;
  j["dropped_transactions"] = r.dropped_transactions;
  Json skipped = Json::array();
  for (const auto& s : parsed.skipped) skipped.push_back({{"line", s.line}, {"reason", s.reason}});
  j["skipped_rows"] = std::move(skipped);
  j["dropped_problems"] = extracted.dropped_problems;
  return j;
}

}  // namespace cli_detail

inline int run_cli(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  using namespace cli_detail;
  CLI::App app{"Simulate learner task-selection strategies under mastery-learning constraints", "masterysim"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  // simulate
  ExperimentConfig cfg;
  bool dump_config = false;
  auto* sim = app.add_subcommand("simulate", "Run a strategy x constraint grid");
  app.set_config("--config", "", "Read simulate settings from the [simulate] section of an INI file (flags win)");
  sim->add_flag("--dump-config", dump_config, "Print the effective configuration as a config file and exit")
      ->configurable(false);
  sim->add_option("--preset", cfg.preset, "Bundled synthetic domain")->capture_default_str();
  sim->add_option("--domain", cfg.domain_file, "Domain JSON file (replaces the preset)");
  sim->add_option("--afm", cfg.afm_file, "AFM parameter JSON file");
  sim->add_option("--bkt", cfg.bkt_file, "BKT parameter JSON file");
  sim->add_option("--strategies", cfg.strategies, "Strategies to run, or all")->capture_default_str()->delimiter(',');
  sim->add_option("--skill-constraints", cfg.skill_constraints, "none, closer_to_mastery, further_from_mastery or all")
      ->capture_default_str()
      ->delimiter(',');
  sim->add_option("--problem-constraints", cfg.problem_constraints, "none, prefer_easier, prefer_harder or all")
      ->capture_default_str()
      ->delimiter(',');
  sim->add_option("--n-learners", cfg.n_learners, "Simulated learners per cell")->capture_default_str();
  sim->add_option("--threshold", cfg.mastery_threshold, "Mastery threshold")->capture_default_str();
  sim->add_option("--max-problems", cfg.max_problems, "Problem cap per learner")->capture_default_str();
  sim->add_option("--seed", cfg.seed, "Experiment seed")->capture_default_str();
  sim->add_option("--skill-constraint-fraction", cfg.skill_constraint_fraction,
                  "Share of skills a skill constraint keeps")
      ->capture_default_str();
  sim->add_option("--out", cfg.output_dir, "Output directory")->capture_default_str();
  sim->add_option("--workers", cfg.workers, "Worker threads per cell")->capture_default_str();
  sim->add_flag("--learner-results,!--no-learner-results", cfg.learner_results, "Write learners.tsv (default on)");
  sim->add_flag("--trace", cfg.trace, "Write step-level traces");
  sim->add_option("--trace-file", cfg.trace_file, "Trace file name (.gz compresses)")->capture_default_str();

  // fit
  std::string tx_path, out_domain, out_params, report_path, fit_name = "fitted", delimiter = "auto";
  ColumnMap columns;
  AfmFitOptions fit_options;
  auto* fit = app.add_subcommand("fit", "Build a domain and fit AFM parameters from a transaction log");
  fit->add_option("transactions", tx_path, "Tab- or comma-separated transaction export")->required();
  fit->add_option("--out-domain", out_domain, "Where to write the domain JSON")->required();
  fit->add_option("--out-params", out_params, "Where to write the AFM parameter JSON")->required();
  fit->add_option("--report", report_path, "Where to write the fit report (default: stdout)");
  fit->add_option("--name", fit_name, "Domain name")->capture_default_str();
  fit->add_option("--delimiter", delimiter, "auto, tab or comma")->capture_default_str();
  fit->add_option("--student-column", columns.student)->capture_default_str();
  fit->add_option("--problem-column", columns.problem)->capture_default_str();
  fit->add_option("--step-column", columns.step)->capture_default_str();
  fit->add_option("--skill-column", columns.skills)->capture_default_str();
  fit->add_option("--outcome-column", columns.outcome)->capture_default_str();
  fit->add_option("--attempt-column", columns.attempt)->capture_default_str();
  fit->add_option("--skill-separator", columns.skill_separator)->capture_default_str();
  fit->add_option("--l2", fit_options.l2, "L2 penalty (intercept excluded)")->capture_default_str();
  fit->add_option("--max-iterations", fit_options.max_iterations)->capture_default_str();
  fit->add_flag("--fix-slope-zero", fit_options.fix_learn_slope_zero, "Hold every learning slope at 0");

  // compare
  std::string results_a, results_b, cell_a, cell_b;
  auto* cmp = app.add_subcommand("compare", "Means, SDs and Cohen's d for two cells");
  cmp->add_option("--results", results_a, "learners.tsv from simulate")->required();
  cmp->add_option("--results-b", results_b, "Second learners.tsv for cell B (default: --results)");
  cmp->add_option("--a", cell_a, "Cell A as strategy/skill_constraint/problem_constraint")->required();
  cmp->add_option("--b", cell_b, "Cell B")->required();

  // generate-domain
  std::string gen_preset, gen_out, gen_afm_out;
  SyntheticSpec gen_spec;
  auto* gen = app.add_subcommand("generate-domain", "Write a synthetic domain");
  gen->add_option("--preset", gen_preset, "Use a bundled preset (also enables --afm-out)");
  gen->add_option("--out", gen_out, "Domain JSON output")->required();
  gen->add_option("--afm-out", gen_afm_out, "Preset AFM parameters output");
  gen->add_option("--name", gen_spec.name)->capture_default_str();
  gen->add_option("--skills", gen_spec.n_skills)->capture_default_str();
  gen->add_option("--problems", gen_spec.n_problems)->capture_default_str();
  gen->add_option("--mean", gen_spec.skills_per_problem_mean, "Mean skills per problem")->capture_default_str();
  gen->add_option("--sd", gen_spec.skills_per_problem_sd, "SD of skills per problem")->capture_default_str();
  gen->add_option("--two-skill-step-prob", gen_spec.two_skill_step_prob)->capture_default_str();
  gen->add_option("--popularity-skew", gen_spec.popularity_skew)->capture_default_str();
  gen->add_option("--rare-skills", gen_spec.rare_skills)->capture_default_str();
  gen->add_option("--rare-skill-weight", gen_spec.rare_skill_weight)->capture_default_str();
  gen->add_option("--seed", gen_spec.seed)->capture_default_str();

  // validate
  std::string val_domain, val_afm, val_bkt;
  auto* val = app.add_subcommand("validate", "Check a domain (and optional parameter files)");
  val->add_option("domain", val_domain, "Domain JSON file")->required();
  val->add_option("--afm", val_afm, "AFM parameter JSON file");
  val->add_option("--bkt", val_bkt, "BKT parameter JSON file");

  const auto hoisted = hoist_config(args);
  std::vector<std::string> reversed(hoisted.rbegin(), hoisted.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    // --help and --version arrive here with exit code 0.
    std::ostringstream o, x;
    const int code = app.exit(e, o, x);
    out << o.str();
    err << x.str();
    return code == 0 ? 0 : 2;
  }

  try {
    if (*sim) {
      if (dump_config) {
        out << config_text(cfg);
        return 0;
      }
      return run_simulate(cfg, out, err);
    }

    if (*fit) {
      std::ifstream in(tx_path, std::ios::binary);
      if (!in) throw Invalid("cannot open " + tx_path);
      char delim = 0;
      if (delimiter == "tab") delim = '\t';
      else if (delimiter == "comma") delim = ',';
      else if (delimiter != "auto") throw Invalid("--delimiter must be auto, tab or comma");
      ParseResult parsed;
      try {
        parsed = parse_transactions(in, columns, delim);
      } catch (const Error& e) {
        throw Invalid(e.what());
      }
      const auto kept = preprocess(parsed.transactions);
      if (kept.empty()) throw Invalid("no transactions retained");
      const auto extracted = extract_paths(kept, fit_name, problem_ids(parsed.transactions));
      const auto violations = validate_domain(extracted.domain);
      if (!violations.empty()) throw Invalid("extracted domain is invalid: " + violations.front());
      const AfmFit result = fit_afm(kept, extracted.domain, fit_options);
      write_json_file(out_domain, domain_to_json(extracted.domain));
      write_json_file(out_params, afm_to_json(result.params, extracted.domain));
      const Json report = fit_report_json(result.report, parsed, extracted);
      if (report_path.empty()) out << report.dump(2) << "\n";
      else write_json_file(report_path, report);
      if (!result.report.converged)
        err << "warning: fit stopped after " << result.report.iterations << " iterations without converging\n";
      return 0;
    }

    if (*cmp) {
      auto load = [](const std::string& path) {
        std::istringstream in(read_text_output(path));
        return read_learner_table(in);
      };
      LearnerValues a_table, b_table;
      try {
        a_table = load(results_a);
        b_table = results_b.empty() ? a_table : load(results_b);
      } catch (const Error& e) {
        throw Invalid(e.what());
      }
      const std::string ka = parse_cell(cell_a), kb = parse_cell(cell_b);
      if (!a_table.count(ka)) throw Invalid("cell " + ka + " not found in " + results_a);
      if (!b_table.count(kb)) throw Invalid("cell " + kb + " not found in " + (results_b.empty() ? results_a : results_b));
      const auto& a = a_table.at(ka);
      const auto& b = b_table.at(kb);
      out << "A " << ka << ": n=" << a.size() << " mean=" << format_double(mean(a), 4)
          << " sd=" << format_double(sample_sd(a), 4) << "\n";
      out << "B " << kb << ": n=" << b.size() << " mean=" << format_double(mean(b), 4)
          << " sd=" << format_double(sample_sd(b), 4) << "\n";
      if (a.size() < 2 || b.size() < 2) {
        out << "cohens_d=undefined (each cell needs at least two learners)\n";
        return 0;
      }
      const auto d = cohens_d(a, b);
      out << "cohens_d=" << (d ? format_double(*d, 4) : std::string("undefined")) << "\n";
      return 0;
    }

    if (*gen) {
      Domain domain;
      if (!gen_preset.empty()) {
        const auto p = find_preset(gen_preset);
        if (!p) throw Invalid("unknown preset \"" + gen_preset + "\"");
        domain = preset_domain(*p);
        if (!gen_afm_out.empty()) write_json_file(gen_afm_out, afm_to_json(preset_afm(*p), domain));
      } else {
        if (!gen_afm_out.empty()) throw Invalid("--afm-out needs --preset");
        try {
          domain = generate_synthetic(gen_spec);
        } catch (const Error& e) {
          throw Invalid(e.what());
        }
      }
      write_json_file(gen_out, domain_to_json(domain));
      const auto [m, sd] = skills_per_problem_moments(domain);
      out << domain.name() << ": " << domain.skill_count() << " skills, " << domain.problem_count()
          << " problems, skills per problem " << format_double(m, 2) << " +/- " << format_double(sd, 2) << "\n";
      return 0;
    }

    if (*val) {
      Domain domain;
      try {
        domain = domain_from_json(read_json_file(val_domain));
      } catch (const Error& e) {
        throw Invalid(e.what());
      }
      auto problems = validate_domain(domain);
      try {
        if (!val_afm.empty()) {
          auto more = validate_afm(afm_from_json(read_json_file(val_afm), domain), domain.skill_count());
          problems.insert(problems.end(), more.begin(), more.end());
        }
        if (!val_bkt.empty()) {
          auto more = validate_bkt(bkt_from_json(read_json_file(val_bkt), domain), domain.skill_count());
          problems.insert(problems.end(), more.begin(), more.end());
        }
      } catch (const Error& e) {
        problems.push_back(e.what());
      }
      if (problems.empty()) {
        out << "ok: " << domain.skill_count() << " skills, " << domain.problem_count() << " problems\n";
        return 0;
      }
      for (const auto& p : problems) out << p << "\n";
      return 2;
    }
  } catch (const Invalid& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const EngineError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}

inline int run_cli(int argc, char** argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run_cli(args, out, err);
}

}  // namespace masterysim
