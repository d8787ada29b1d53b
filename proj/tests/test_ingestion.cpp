#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "masterysim/ingestion.hpp"
#include "masterysim/rng.hpp"

using namespace masterysim;

namespace {

const std::string kHeader = "Anon Student Id\tProblem Name\tStep Name\tAttempt At Step\tOutcome\tKC(Default)\n";

ParseResult parse(const std::string& text, const ColumnMap& map = {}, char delim = 0) {
  std::istringstream in(text);
  return parse_transactions(in, map, delim);
}

Transaction tx(std::string student, std::string problem, std::string step, std::vector<std::string> skills,
               Outcome o = Outcome::Correct, std::uint32_t attempt = 1, std::size_t row = 0) {
  return Transaction{std::move(student), std::move(problem), std::move(step), std::move(skills), o, attempt, row};
}

}  // namespace

TEST(Parse, HeaderOnlyGivesNothing) {
  const auto r = parse(kHeader);
  EXPECT_TRUE(r.transactions.empty());
  EXPECT_TRUE(r.skipped.empty());
  EXPECT_EQ(r.delimiter, '\t');
}

TEST(Parse, RowsKeepOrder) {
  const auto r = parse(kHeader + "a\tp1\ts1\t1\tCORRECT\tk1\n" + "b\tp1\ts1\t1\tINCORRECT\tk1~~k2\n" +
                       "a\tp2\ts9\t2\tcorrect\tk2\n");
  ASSERT_EQ(r.transactions.size(), 3u);
  EXPECT_EQ(r.transactions[0].student_id, "a");
  EXPECT_EQ(r.transactions[1].skill_ids, (std::vector<std::string>{"k1", "k2"}));
  EXPECT_EQ(r.transactions[1].outcome, Outcome::Incorrect);
  EXPECT_EQ(r.transactions[2].attempt, 2u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(r.transactions[i].row_index, i);
}

TEST(Parse, OutcomeLabelsAreCaseInsensitive) {
  for (const char* label : {"HINT", "hint", "Hint", " hInT "}) EXPECT_EQ(parse_outcome(label), Outcome::Hint) << label;
  EXPECT_EQ(parse_outcome("BUG"), Outcome::Incorrect);
  EXPECT_EQ(parse_outcome("ERROR"), Outcome::Incorrect);
  EXPECT_EQ(parse_outcome("OK"), Outcome::Correct);
  EXPECT_EQ(parse_outcome("INITIAL_HINT"), Outcome::Hint);
  EXPECT_FALSE(parse_outcome("maybe"));
  const auto r = parse(kHeader + "a\tp\ts\t1\tHINT\tk\n");
  ASSERT_EQ(r.transactions.size(), 1u);
  EXPECT_EQ(r.transactions[0].outcome, Outcome::Hint);
}

TEST(Parse, MissingRequiredColumnNamesIt) {
  try {
    parse("Anon Student Id\tProblem Name\tStep Name\tOutcome\n");
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("KC(Default)"), std::string::npos);
  }
}

TEST(Parse, MalformedRowsAreSkippedAndReported) {
  const auto r = parse(kHeader + "a\tp\ts\t1\tCORRECT\tk\n" +  // line 2 ok
                       "a\tp\ts\t1\tCORRECT\n" +                // 3: short
                       "a\tp\ts\t1\tCORRECT\t\n" +              // 4: no skill
                       "a\tp\ts\t1\tsideways\tk\n" +            // 5: outcome
                       "a\tp\ts\tzero\tCORRECT\tk\n" +          // 6: attempt
                       "\tp\ts\t1\tCORRECT\tk\n" +              // 7: empty student
                       "\n" +                                   // 8: blank, ignored
                       "b\tp\ts\t1\tCORRECT\tk\n");             // 9 ok
  EXPECT_EQ(r.transactions.size(), 2u);
  ASSERT_EQ(r.skipped.size(), 5u);
  EXPECT_EQ(r.skipped[0].line, 3u);
  EXPECT_EQ(r.skipped[1].line, 4u);
  EXPECT_EQ(r.skipped[2].line, 5u);
  EXPECT_EQ(r.skipped[3].line, 6u);
  EXPECT_EQ(r.skipped[4].line, 7u);
  EXPECT_NE(r.skipped[1].reason.find("skill"), std::string::npos);
}

TEST(Parse, CommaQuotingBomAndCrlf) {
  const std::string text =
      "\xEF\xBB\xBF" "Anon Student Id,Problem Name,Step Name,Outcome,KC(Default)\r\n"
      "a,\"3x + 1, then 2\",\"say \"\"hi\"\"\",correct,k\r\n";
  const auto r = parse(text);
  EXPECT_EQ(r.delimiter, ',');
  ASSERT_EQ(r.transactions.size(), 1u);
  EXPECT_EQ(r.transactions[0].problem_id, "3x + 1, then 2");
  EXPECT_EQ(r.transactions[0].step_id, "say \"hi\"");
}

TEST(Parse, AttemptsInferredWithoutColumn) {
  const auto r = parse("Anon Student Id\tProblem Name\tStep Name\tOutcome\tKC(Default)\n"
                       "a\tp\ts\tINCORRECT\tk\na\tp\ts\tCORRECT\tk\na\tp\tt\tCORRECT\tk\n");
  ASSERT_EQ(r.transactions.size(), 3u);
  EXPECT_EQ(r.transactions[0].attempt, 1u);
  EXPECT_EQ(r.transactions[1].attempt, 2u);
  EXPECT_EQ(r.transactions[2].attempt, 1u);
}

TEST(Parse, CustomColumnsAndSeparator) {
  ColumnMap m;
  m.student = "who";
  m.problem = "prob";
  m.step = "step";
  m.skills = "kc";
  m.outcome = "result";
  m.skill_separator = "|";
  const auto r = parse("who,prob,step,result,kc\nx,p,s,ok,a|b\n", m, ',');
  ASSERT_EQ(r.transactions.size(), 1u);
  EXPECT_EQ(r.transactions[0].skill_ids, (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(r.transactions[0].attempt, 1u);
}

TEST(Preprocess, KeepsFirstAttemptOnly) {
  const std::vector<Transaction> in{tx("a", "p", "s", {"k"}, Outcome::Incorrect, 1, 0),
                                    tx("a", "p", "s", {"k"}, Outcome::Correct, 2, 1)};
  const auto out = preprocess(in);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].outcome, Outcome::Incorrect);
}

TEST(Preprocess, FirstHintBecomesIncorrect) {
  const auto out = preprocess({tx("a", "p", "s", {"k"}, Outcome::Hint, 1, 0), tx("a", "p", "s", {"k"}, Outcome::Correct, 2, 1)});
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].outcome, Outcome::Incorrect);
}

TEST(Preprocess, AllCorrectFirstAttemptsUnchanged) {
  const std::vector<Transaction> in{tx("a", "p", "s", {"k"}, Outcome::Correct, 1, 0),
                                    tx("a", "p", "t", {"k"}, Outcome::Correct, 1, 1),
                                    tx("b", "p", "s", {"k"}, Outcome::Correct, 1, 2)};
  EXPECT_EQ(preprocess(in), in);
}

TEST(Preprocess, Idempotent) {
  Rng rng(4);
  std::vector<Transaction> in;
  for (std::size_t i = 0; i < 400; ++i)
    in.push_back(tx("s" + std::to_string(rng.uniform_index(5)), "p" + std::to_string(rng.uniform_index(3)),
                    "t" + std::to_string(rng.uniform_index(4)), {"k"},
                    static_cast<Outcome>(rng.uniform_index(3)), static_cast<std::uint32_t>(1 + rng.uniform_index(3)), i));
  const auto once = preprocess(in);
  EXPECT_EQ(preprocess(once), once);
  for (const auto& t : once) {
    EXPECT_EQ(t.attempt, 1u);
    EXPECT_NE(t.outcome, Outcome::Hint);
  }
}

TEST(ExtractPaths, IdenticalSequences) {
  std::vector<Transaction> t;
  std::size_t row = 0;
  for (const char* s : {"a", "b", "c"}) {
    t.push_back(tx(s, "p", "1", {"A"}, Outcome::Correct, 1, row++));
    t.push_back(tx(s, "p", "2", {"B"}, Outcome::Correct, 1, row++));
  }
  const auto d = extract_paths(t).domain;
  ASSERT_EQ(d.problem_count(), 1u);
  ASSERT_EQ(d.problem(0).steps.size(), 2u);
  EXPECT_EQ(d.skill(d.problem(0).steps[0].skills[0]).id, "A");
  EXPECT_EQ(d.skill(d.problem(0).steps[1].skills[0]).id, "B");
}

TEST(ExtractPaths, ModeByCount) {
  // [A,B] twice, [B,A] once (the single [B,A] student has the smallest id)
  std::vector<Transaction> t{tx("a", "p", "2", {"B"}, Outcome::Correct, 1, 0), tx("a", "p", "1", {"A"}, Outcome::Correct, 1, 1),
                             tx("b", "p", "1", {"A"}, Outcome::Correct, 1, 2), tx("b", "p", "2", {"B"}, Outcome::Correct, 1, 3),
                             tx("c", "p", "1", {"A"}, Outcome::Correct, 1, 4), tx("c", "p", "2", {"B"}, Outcome::Correct, 1, 5)};
  const auto d = extract_paths(t).domain;
  EXPECT_EQ(d.skill(d.problem(0).steps[0].skills[0]).id, "A");
}

TEST(ExtractPaths, TieGoesToSmallestStudent) {
  std::vector<Transaction> t{tx("zed", "p", "1", {"A"}, Outcome::Correct, 1, 0), tx("zed", "p", "2", {"B"}, Outcome::Correct, 1, 1),
                             tx("amy", "p", "2", {"B"}, Outcome::Correct, 1, 2), tx("amy", "p", "1", {"A"}, Outcome::Correct, 1, 3)};
  const auto d = extract_paths(t).domain;
  EXPECT_EQ(d.skill(d.problem(0).steps[0].skills[0]).id, "B");
}

TEST(ExtractPaths, SingleStudentAndDroppedProblems) {
  const std::vector<Transaction> t{tx("a", "p2", "x", {"K2", "K1"}, Outcome::Correct, 1, 0)};
  const auto e = extract_paths(t, "dom", {"p1", "p2"});
  EXPECT_EQ(e.domain.name(), "dom");
  EXPECT_EQ(e.dropped_problems, (std::vector<std::string>{"p1"}));
  ASSERT_EQ(e.domain.problem_count(), 1u);
  EXPECT_EQ(e.domain.problem(0).steps[0].skills, (std::vector<SkillIndex>{0, 1}));
  EXPECT_TRUE(validate_domain(e.domain).empty());
}

TEST(ExtractPaths, OutputAlwaysValidates) {
  Rng rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Transaction> t;
    for (std::size_t i = 0; i < 60; ++i) {
      std::vector<std::string> skills{"k" + std::to_string(rng.uniform_index(6))};
      if (rng.uniform() < 0.3) skills.push_back("k" + std::to_string(rng.uniform_index(6)));
      if (skills.size() == 2 && skills[0] == skills[1]) skills.pop_back();
      t.push_back(tx("s" + std::to_string(rng.uniform_index(4)), "p" + std::to_string(rng.uniform_index(5)),
                     "t" + std::to_string(rng.uniform_index(3)), skills, Outcome::Correct, 1, i));
    }
    const auto kept = preprocess(t);
    EXPECT_TRUE(validate_domain(extract_paths(kept).domain).empty());
  }
}

TEST(Fixture, BundledLogParses) {
  std::ifstream in(MASTERYSIM_TEST_DATA "/tiny_transactions.tsv");
  ASSERT_TRUE(in);
  const auto r = parse_transactions(in);
  EXPECT_TRUE(r.skipped.empty());
  EXPECT_EQ(r.transactions.size(), 15u);
  const auto kept = preprocess(r.transactions);
  EXPECT_EQ(kept.size(), 12u);
  const auto d = extract_paths(kept).domain;
  EXPECT_EQ(d.problem_count(), 2u);
  EXPECT_EQ(d.skill_count(), 3u);
}
