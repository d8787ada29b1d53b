#pragma once

// Delimiter-separated outputs and the console summary.
//
// Summary table (tab-separated, one row per cell), columns in order:
//   strategy skill_constraint problem_constraint n_learners mean_overpractice
//   sd_overpractice mean_overpractice_per_skill completion_rate mean_problems
//   learners_without_mastery
// Per-learner table:
//   strategy skill_constraint problem_constraint learner_id ability overpractice
//   total_problems completed opportunities mastered_at
// with per-skill lists joined by ';' and '-' for a skill never mastered.
// Trace (one step per line):
//   learner_id problem_seq problem_id step_index skills correct post_mastery
//   selected_skill selected_was_mastered
//
// Every file starts with '#' provenance lines. Paths ending in ".gz" are
// written gzip-compressed.

#include <zlib.h>

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "masterysim/domain.hpp"
#include "masterysim/engine.hpp"
#include "masterysim/metrics.hpp"

namespace masterysim {

inline constexpr std::string_view kVersion = "0.1.0";

inline std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

struct Provenance {
  std::string config_hash;  // hex FNV-1a of the canonical config text
  std::uint64_t seed = 0;

  std::string header() const {
    return "# masterysim " + std::string(kVersion) + "\n# config_hash fnv1a64:" + config_hash +
           "\n# seed " + std::to_string(seed) + "\n";
  }
};

inline std::string format_double(double v, int precision = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

// Shortest text that parses back to the same double.
inline std::string exact_double(double v) {
  char buf[64];
  for (int p = 15; p <= 17; ++p) {
    std::snprintf(buf, sizeof buf, "%.*g", p, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

inline constexpr std::string_view kSummaryColumns =
    "strategy\tskill_constraint\tproblem_constraint\tn_learners\tmean_overpractice\tsd_overpractice\t"
    "mean_overpractice_per_skill\tcompletion_rate\tmean_problems\tlearners_without_mastery";

inline std::string summary_row(const CellSummary& s) {
  std::string row;
  row += std::string(to_string(s.policy.strategy)) + "\t" + std::string(to_string(s.policy.skill_constraint)) +
         "\t" + std::string(to_string(s.policy.problem_constraint)) + "\t" + std::to_string(s.n_learners);
  for (double v : {s.mean_overpractice, s.sd_overpractice, s.mean_overpractice_per_skill, s.completion_rate,
                   s.mean_problems})
    row += "\t" + format_double(v);
  row += "\t" + std::to_string(s.learners_without_mastery);
  return row;
}

inline std::string summary_table(const std::vector<CellSummary>& cells, const Provenance& prov) {
  std::string out = prov.header();
  out += kSummaryColumns;
  out += "\n";
  for (const auto& c : cells) out += summary_row(c) + "\n";
  return out;
}

inline std::string learner_table_header() {
  return "strategy\tskill_constraint\tproblem_constraint\tlearner_id\tability\toverpractice\ttotal_problems\t"
         "completed\topportunities\tmastered_at\n";
}

inline std::string learner_rows(const PolicyConfig& policy, const std::vector<LearnerResult>& results) {
  std::string out;
  const std::string cell = std::string(to_string(policy.strategy)) + "\t" +
                           std::string(to_string(policy.skill_constraint)) + "\t" +
                           std::string(to_string(policy.problem_constraint)) + "\t";
  for (const auto& r : results) {
    std::string opp, at;
    for (std::size_t k = 0; k < r.opportunities.size(); ++k) {
      if (k) {
        opp += ';';
        at += ';';
      }
      opp += std::to_string(r.opportunities[k]);
      at += r.mastered_at[k] ? std::to_string(*r.mastered_at[k]) : "-";
    }
    out += cell + std::to_string(r.learner_id) + "\t" + exact_double(r.ability) + "\t" +
           exact_double(overpractice(r)) + "\t" + std::to_string(r.total_problems) + "\t" +
           (r.completed ? "1" : "0") + "\t" + opp + "\t" + at + "\n";
  }
  return out;
}

// Per-learner overpractice grouped by cell key "strategy/skill/problem".
using LearnerValues = std::map<std::string, std::vector<double>>;

inline LearnerValues read_learner_table(std::istream& in) {
  LearnerValues out;
  std::string line;
  bool header_seen = false;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, '\t');) f.push_back(cell);
    if (!header_seen) {
      header_seen = true;
      if (f.size() < 6 || f[0] != "strategy" || f[5] != "overpractice")
        throw Error("learner table: unexpected header at line " + std::to_string(line_no));
      continue;
    }
    if (f.size() < 6) throw Error("learner table: short row at line " + std::to_string(line_no));
    char* end = nullptr;
    const double v = std::strtod(f[5].c_str(), &end);
    if (end == f[5].c_str()) throw Error("learner table: bad overpractice at line " + std::to_string(line_no));
    out[f[0] + "/" + f[1] + "/" + f[2]].push_back(v);
  }
  if (!header_seen) throw Error("learner table: no header row");
  return out;
}

// Aligned text for the terminal.
inline std::string console_table(const std::vector<CellSummary>& cells) {
  const std::vector<std::string> head = {"strategy", "skill", "problem", "mean", "sd", "per_skill", "completed"};
  std::vector<std::vector<std::string>> rows;
  for (const auto& c : cells)
    rows.push_back({std::string(to_string(c.policy.strategy)), std::string(to_string(c.policy.skill_constraint)),
                    std::string(to_string(c.policy.problem_constraint)), format_double(c.mean_overpractice, 3),
                    format_double(c.sd_overpractice, 3), format_double(c.mean_overpractice_per_skill, 3),
                    format_double(100.0 * c.completion_rate, 1) + "%"});
  std::vector<std::size_t> width(head.size());
  for (std::size_t i = 0; i < head.size(); ++i) width[i] = head[i].size();
  for (const auto& r : rows)
    for (std::size_t i = 0; i < r.size(); ++i) width[i] = std::max(width[i], r[i].size());
  auto line = [&](const std::vector<std::string>& r) {
    std::string s;
    for (std::size_t i = 0; i < r.size(); ++i) {
      const std::size_t pad = width[i] - r[i].size();
      if (i < 3) s += r[i] + std::string(pad, ' ');
      else s += std::string(pad, ' ') + r[i];
      if (i + 1 < r.size()) s += "  ";
    }
    return s + "\n";
  };
  std::string out = line(head);
  std::size_t total = 0;
  for (std::size_t w : width) total += w;
  out += std::string(total + 2 * (width.size() - 1), '-') + "\n";
  for (const auto& r : rows) out += line(r);
  return out;
}

// Plain or gzip text output chosen by file name.
class TextOutput {
 public:
  explicit TextOutput(const std::string& path) : path_(path) {
    if (path.size() >= 3 && path.compare(path.size() - 3, 3, ".gz") == 0) {
      gz_ = gzopen(path.c_str(), "wb");
      if (!gz_) throw Error("cannot write " + path);
    } else {
      plain_.open(path, std::ios::binary);
      if (!plain_) throw Error("cannot write " + path);
    }
  }
  TextOutput(const TextOutput&) = delete;
  TextOutput& operator=(const TextOutput&) = delete;
  ~TextOutput() {
    if (gz_) gzclose(gz_);
  }

  void write(std::string_view text) {
    if (text.empty()) return;
    if (gz_) {
      if (gzwrite(gz_, text.data(), static_cast<unsigned>(text.size())) != static_cast<int>(text.size()))
        throw Error("write failed for " + path_);
    } else {
      plain_.write(text.data(), static_cast<std::streamsize>(text.size()));
      if (!plain_) throw Error("write failed for " + path_);
    }
  }

  void close() {
    if (gz_) {
      const int rc = gzclose(gz_);
      gz_ = nullptr;
      if (rc != Z_OK) throw Error("write failed for " + path_);
    } else if (plain_.is_open()) {
      plain_.close();
      if (!plain_) throw Error("write failed for " + path_);
    }
  }

 private:
  std::string path_;
  std::ofstream plain_;
  gzFile gz_ = nullptr;
};

// Reads a file written by TextOutput (gzip detected by name).
inline std::string read_text_output(const std::string& path) {
  if (path.size() >= 3 && path.compare(path.size() - 3, 3, ".gz") == 0) {
    gzFile f = gzopen(path.c_str(), "rb");
    if (!f) throw Error("cannot open " + path);
    std::string out;
    char buf[1 << 14];
    int n;
    while ((n = gzread(f, buf, sizeof buf)) > 0) out.append(buf, static_cast<std::size_t>(n));
    gzclose(f);
    if (n < 0) throw Error("corrupt gzip stream in " + path);
    return out;
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string trace_header() {
  return "learner_id\tproblem_seq\tproblem_id\tstep_index\tskills\tcorrect\tpost_mastery\tselected_skill\t"
         "selected_was_mastered\n";
}

inline std::string trace_rows(const Domain& domain, const std::vector<TraceEvent>& events) {
  std::string out;
  for (const auto& e : events) {
    std::string skills, post;
    for (std::size_t i = 0; i < e.skills.size(); ++i) {
      if (i) {
        skills += ';';
        post += ';';
      }
      skills += domain.skill(e.skills[i]).id;
      post += format_double(e.post_mastery[i]);
    }
    out += std::to_string(e.learner_id) + "\t" + std::to_string(e.problem_seq) + "\t" + domain.problem(e.problem).id +
           "\t" + std::to_string(e.step_index) + "\t" + skills + "\t" + (e.correct ? "1" : "0") + "\t" + post + "\t" +
           domain.skill(e.selected_skill).id + "\t" + (e.selected_was_mastered ? "1" : "0") + "\n";
  }
  return out;
}

}  // namespace masterysim
