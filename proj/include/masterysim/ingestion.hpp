#pragma once

// DataShop-style transaction logs: parsing, first-attempt preprocessing and
// typical solution path extraction.

#include <algorithm>
#include <cctype>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "masterysim/domain.hpp"

namespace masterysim {

enum class Outcome { Correct, Incorrect, Hint };

inline std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::Correct: return "correct";
    case Outcome::Incorrect: return "incorrect";
    case Outcome::Hint: return "hint";
  }
  return "unknown";
}

// Case-insensitive. correct/ok -> correct; incorrect/error/bug/wrong -> incorrect;
// hint/hint_request/initial_hint -> hint.
inline std::optional<Outcome> parse_outcome(std::string_view text) {
  std::string s;
  for (char c : text)
    if (!std::isspace(static_cast<unsigned char>(c))) s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (s == "correct" || s == "ok") return Outcome::Correct;
  if (s == "incorrect" || s == "error" || s == "bug" || s == "wrong") return Outcome::Incorrect;
  if (s == "hint" || s == "hint_request" || s == "initial_hint") return Outcome::Hint;
  return std::nullopt;
}

struct Transaction {
  std::string student_id;
  std::string problem_id;
  std::string step_id;
  std::vector<std::string> skill_ids;
  Outcome outcome = Outcome::Correct;
  std::uint32_t attempt = 1;
  std::size_t row_index = 0;  // 0-based data row in the source

  bool operator==(const Transaction&) const = default;
};

// Header names for each field. Multi-skill cells are split on `skill_separator`.
struct ColumnMap {
  std::string student = "Anon Student Id";
  std::string problem = "Problem Name";
  std::string step = "Step Name";
  std::string skills = "KC(Default)";
  std::string outcome = "Outcome";
  // Optional: when the column is absent, attempts are numbered by order of
  // appearance within each (student, problem, step).
  std::string attempt = "Attempt At Step";
  std::string skill_separator = "~~";
};

struct SkippedRow {
  std::size_t line = 0;  // 1-based line in the source, header is line 1
  std::string reason;
};

struct ParseResult {
  std::vector<Transaction> transactions;
  std::vector<SkippedRow> skipped;
  char delimiter = '\t';
};

// Tab if the header contains one, otherwise comma.
inline char detect_delimiter(std::string_view header) { return header.find('\t') != std::string_view::npos ? '\t' : ','; }

// Splits one record. Double quotes group fields and "" is a literal quote.
// Returns nullopt for an unterminated quote.
inline std::optional<std::vector<std::string>> split_record(std::string_view line, char delimiter) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          fields.back().push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        fields.back().push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == delimiter) {
      fields.emplace_back();
    } else {
      fields.back().push_back(c);
    }
  }
  if (quoted) return std::nullopt;
  return fields;
}

namespace detail {

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

inline std::vector<std::string> split_skills(std::string_view cell, std::string_view sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t end = sep.empty() ? std::string_view::npos : cell.find(sep, start);
    std::string piece = trim(cell.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start));
    if (!piece.empty() && std::find(out.begin(), out.end(), piece) == out.end()) out.push_back(std::move(piece));
    if (end == std::string_view::npos) break;
    start = end + sep.size();
  }
  return out;
}

}  // namespace detail

// `delimiter` = 0 auto-detects from the header line.
inline ParseResult parse_transactions(std::istream& in, const ColumnMap& columns = {}, char delimiter = 0) {
  ParseResult result;
  std::string line;
  if (!std::getline(in, line)) throw Error("transaction file has no header row");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  result.delimiter = delimiter ? delimiter : detect_delimiter(line);

  const auto header = split_record(line, result.delimiter);
  if (!header) throw Error("transaction header has an unterminated quote");
  auto column = [&](const std::string& name, bool required) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < header->size(); ++i)
      if (detail::trim((*header)[i]) == name) return i;
    if (required) throw Error("missing required column \"" + name + "\"");
    return std::nullopt;
  };
  const std::size_t c_student = *column(columns.student, true);
  const std::size_t c_problem = *column(columns.problem, true);
  const std::size_t c_step = *column(columns.step, true);
  const std::size_t c_skills = *column(columns.skills, true);
  const std::size_t c_outcome = *column(columns.outcome, true);
  const auto c_attempt = column(columns.attempt, false);

  std::map<std::tuple<std::string, std::string, std::string>, std::uint32_t> seen_attempts;
  std::size_t line_no = 1, row = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (detail::trim(line).empty()) continue;
    const std::size_t this_row = row++;
    auto skip = [&](std::string reason) { result.skipped.push_back({line_no, std::move(reason)}); };

    const auto fields = split_record(line, result.delimiter);
    if (!fields) {
      skip("unterminated quote");
      continue;
    }
    if (fields->size() != header->size()) {
      skip("expected " + std::to_string(header->size()) + " fields, found " + std::to_string(fields->size()));
      continue;
    }
    Transaction t;
    t.student_id = detail::trim((*fields)[c_student]);
    t.problem_id = detail::trim((*fields)[c_problem]);
    t.step_id = detail::trim((*fields)[c_step]);
    t.row_index = this_row;
    if (t.student_id.empty() || t.problem_id.empty() || t.step_id.empty()) {
      skip("empty student, problem or step");
      continue;
    }
    t.skill_ids = detail::split_skills((*fields)[c_skills], columns.skill_separator);
    if (t.skill_ids.empty()) {
      skip("no skill label");
      continue;
    }
    const auto outcome = parse_outcome((*fields)[c_outcome]);
    if (!outcome) {
      skip("unrecognised outcome \"" + detail::trim((*fields)[c_outcome]) + "\"");
      continue;
    }
    t.outcome = *outcome;
    if (c_attempt) {
      const std::string text = detail::trim((*fields)[*c_attempt]);
      std::size_t used = 0;
      long value = 0;
      try {
        value = std::stol(text, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != text.size() || value < 1) {
        skip("attempt number must be a positive integer");
        continue;
      }
      t.attempt = static_cast<std::uint32_t>(value);
    } else {
      t.attempt = ++seen_attempts[{t.student_id, t.problem_id, t.step_id}];
    }
    result.transactions.push_back(std::move(t));
  }
  return result;
}

// First attempts only, one per (student, problem, step) in source order; a
// retained hint counts as incorrect.
inline std::vector<Transaction> preprocess(const std::vector<Transaction>& transactions) {
  std::vector<const Transaction*> ordered;
  ordered.reserve(transactions.size());
  for (const auto& t : transactions) ordered.push_back(&t);
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const Transaction* a, const Transaction* b) { return a->row_index < b->row_index; });

  std::set<std::tuple<std::string_view, std::string_view, std::string_view>> kept;
  std::vector<Transaction> out;
  for (const Transaction* t : ordered) {
    if (t->attempt != 1) continue;
    if (!kept.emplace(t->student_id, t->problem_id, t->step_id).second) continue;
    out.push_back(*t);
    if (out.back().outcome == Outcome::Hint) out.back().outcome = Outcome::Incorrect;
  }
  return out;
}

struct ExtractedDomain {
  Domain domain;
  // Problems listed in `known_problems` with no retained transactions.
  std::vector<std::string> dropped_problems;
};

// For each problem, every student's step sequence (ordered by row_index, each
// step's skills sorted) is tallied and the most frequent sequence becomes the
// problem's solution path. Ties go to the sequence seen for the
// lexicographically smallest student id. Problems keep first-appearance
// order; skills are sorted by id.
inline ExtractedDomain extract_paths(const std::vector<Transaction>& transactions, const std::string& name = "domain",
                                     const std::vector<std::string>& known_problems = {}) {
  using Path = std::vector<std::vector<std::string>>;
  std::vector<const Transaction*> ordered;
  for (const auto& t : transactions) ordered.push_back(&t);
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const Transaction* a, const Transaction* b) { return a->row_index < b->row_index; });

  std::vector<std::string> problem_order;
  std::map<std::string, std::map<std::string, Path>> paths;  // problem -> student -> path
  for (const Transaction* t : ordered) {
    auto [it, fresh] = paths.try_emplace(t->problem_id);
    if (fresh) problem_order.push_back(t->problem_id);
    std::vector<std::string> skills = t->skill_ids;
    std::sort(skills.begin(), skills.end());
    skills.erase(std::unique(skills.begin(), skills.end()), skills.end());
    it->second[t->student_id].push_back(std::move(skills));
  }

  std::vector<std::pair<std::string, Path>> chosen;
  std::set<std::string> skill_set;
  for (const auto& problem : problem_order) {
    struct Tally {
      std::size_t count = 0;
      std::string first_student;
    };
    std::map<Path, Tally> tally;
    for (const auto& [student, path] : paths[problem]) {  // students ascend, so the first is the smallest
      auto& entry = tally[path];
      if (entry.count++ == 0) entry.first_student = student;
    }
    const Path* best = nullptr;
    const Tally* best_tally = nullptr;
    for (const auto& [path, t] : tally)
      if (!best || t.count > best_tally->count ||
          (t.count == best_tally->count && t.first_student < best_tally->first_student)) {
        best = &path;
        best_tally = &t;
      }
    for (const auto& step : *best) skill_set.insert(step.begin(), step.end());
    chosen.emplace_back(problem, *best);
  }

  std::vector<std::string> skill_ids(skill_set.begin(), skill_set.end());
  std::map<std::string, SkillIndex> index;
  for (std::size_t k = 0; k < skill_ids.size(); ++k) index[skill_ids[k]] = k;
  std::vector<Problem> problems;
  for (const auto& [id, path] : chosen) {
    Problem p;
    p.id = id;
    for (const auto& step : path) {
      Step s;
      for (const auto& skill : step) s.skills.push_back(index.at(skill));
      p.steps.push_back(std::move(s));
    }
    problems.push_back(std::move(p));
  }

  ExtractedDomain out{Domain(name, skill_ids, std::move(problems)), {}};
  for (const auto& p : known_problems)
    if (!paths.count(p) && std::find(out.dropped_problems.begin(), out.dropped_problems.end(), p) == out.dropped_problems.end())
      out.dropped_problems.push_back(p);
  return out;
}

// Distinct problem ids in source order.
inline std::vector<std::string> problem_ids(const std::vector<Transaction>& transactions) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& t : transactions)
    if (seen.insert(t.problem_id).second) out.push_back(t.problem_id);
  return out;
}

}  // namespace masterysim
