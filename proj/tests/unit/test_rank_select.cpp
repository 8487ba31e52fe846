#include <algorithm>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <json.hpp>

#include "brt/error.hpp"
#include "brt/rank_select.hpp"
#include "oracles.hpp"

using namespace brt;
using namespace brt::testing;

namespace {

CandidateTest cand(int index, const std::string& body, int tokens = 10, const std::string& name = "") {
  CandidateTest c;
  c.bug_id = "B-1";
  c.sample_index = index;
  c.method_text = "public void test" + (name.empty() ? "S" + std::to_string(index) : name) + "() {\n" + body + "\n}";
  c.raw_completion = c.method_text;
  c.token_count = tokens;
  return c;
}

FibEntry fib(const CandidateTest& c, const std::string& type, const std::string& message) {
  ExecutionOutcome o;
  o.bug_id = c.bug_id;
  o.sample_index = c.sample_index;
  o.status = OutcomeStatus::Fail;
  o.failure_type = type;
  o.failure_message = message;
  return {c, o};
}

Cluster cluster(const std::string& type, const std::string& message, std::vector<CandidateTest> members) {
  Cluster c;
  c.key = {type, message};
  c.size = static_cast<int>(members.size());
  c.members = std::move(members);
  return c;
}

BugReport report(const std::string& title, const std::string& description) {
  return BugReport{"B-1", title, description, std::nullopt, false, "p", std::nullopt};
}

std::vector<int> indices(const RankedSuggestions& r) {
  std::vector<int> out;
  for (const auto& e : r.ordered) out.push_back(e.candidate.sample_index);
  return out;
}

}  // namespace

TEST(Normalize, Whitespace) {
  EXPECT_EQ(normalize_message("  a \t b\n\nc  "), "a b c");
  EXPECT_EQ(normalize_message(""), "");
}

TEST(Normalize, Abstraction) {
  EXPECT_EQ(normalize_message("at 2023-04-01T10:11:12.345Z took 12:00:01", true), "at <TIME> took <TIME>");
  EXPECT_EQ(normalize_message("ts=1700000000123 obj@1a2b3c4d ptr 0xDEADbeef", true),
            "ts=<TIME> obj@<ADDR> ptr <ADDR>");
  EXPECT_EQ(normalize_message("expected:<4294967294> but was:<-2>", true), "expected:<4294967294> but was:<-2>");
  EXPECT_EQ(normalize_message("at 2023-04-01", false), "at 2023-04-01");
}

TEST(Cluster, IdenticalOutputs) {
  std::vector<FibEntry> fibs;
  for (int i = 0; i < 3; ++i) fibs.push_back(fib(cand(i, "a();"), "java.lang.AssertionError", "boom"));
  const auto clusters = cluster_fibs(fibs);
  ASSERT_EQ(clusters.size(), 1u);
  EXPECT_EQ(clusters[0].size, 3);
}

TEST(Cluster, DistinctTypes) {
  const auto clusters = cluster_fibs({fib(cand(0, "a();"), "java.lang.AssertionError", ""),
                                      fib(cand(1, "b();"), "java.lang.NullPointerException", "")});
  EXPECT_EQ(clusters.size(), 2u);
}

TEST(Cluster, TimestampAbstraction) {
  const std::vector<FibEntry> fibs = {
      fib(cand(0, "a();"), "java.lang.AssertionError", "stamp 2021-03-04 10:00:01 differs"),
      fib(cand(1, "b();"), "java.lang.AssertionError", "stamp 2021-03-04 10:00:07 differs")};
  EXPECT_EQ(cluster_fibs(fibs, true).size(), 1u);
  EXPECT_EQ(cluster_fibs(fibs, false).size(), 2u);
}

TEST(Cluster, WhitespaceOnlyDifferencesMerge) {
  const auto clusters = cluster_fibs({fib(cand(0, "a();"), "T", "x  y"), fib(cand(1, "b();"), "T", " x\ny ")});
  ASSERT_EQ(clusters.size(), 1u);
  EXPECT_EQ(clusters[0].key.normalized_message, "x y");
}

TEST(Cluster, OrderedByEarliestMember) {
  const auto clusters = cluster_fibs({fib(cand(5, "a();"), "Z", ""), fib(cand(2, "b();"), "A", ""),
                                      fib(cand(0, "c();"), "Z", ""), fib(cand(7, "d();"), "M", "")});
  ASSERT_EQ(clusters.size(), 3u);
  EXPECT_EQ(clusters[0].key.failure_type, "Z");
  EXPECT_EQ(clusters[0].members.front().sample_index, 0);
  EXPECT_EQ(clusters[1].key.failure_type, "A");
  EXPECT_EQ(clusters[2].key.failure_type, "M");
}

TEST(Select, Boundary) {
  const std::vector<Cluster> ones = {cluster("A", "", {cand(0, "a();")}), cluster("B", "", {cand(1, "b();")})};
  const auto d = select(ones, 1);
  EXPECT_FALSE(d.selected);
  EXPECT_EQ(d.max_cluster_size, 1);
}

TEST(Select, Selected) {
  const std::vector<Cluster> cs = {cluster("A", "", {cand(0, "a();"), cand(1, "b();"), cand(2, "c();")}),
                                   cluster("B", "", {cand(3, "d();")})};
  const auto d = select(cs, 1);
  EXPECT_TRUE(d.selected);
  EXPECT_EQ(d.max_cluster_size, 3);
  EXPECT_EQ(d.threshold, 1);
}

TEST(Select, NoFibs) {
  const auto d = select({}, 0);
  EXPECT_FALSE(d.selected);
  EXPECT_EQ(d.max_cluster_size, 0);
}

TEST(Select, NegativeThreshold) { EXPECT_THROW(select({}, -1), Error); }

TEST(Select, MonotoneInThreshold) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 100; ++i) {
    const auto clusters = cluster_fibs(to_fibs(random_instance(rng)));
    bool prev = true;
    for (int thr = 0; thr <= 10; ++thr) {
      const bool sel = select(clusters, thr).selected;
      EXPECT_TRUE(prev || !sel);
      prev = sel;
    }
  }
}

TEST(Dedup, DifferentNamesSameBody) {
  const auto out = dedup_syntactic({cand(3, "x(1);", 10, "Foo"), cand(1, "x(1);", 10, "Bar")});
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].sample_index, 1);
}

TEST(Dedup, LiteralDifferenceKept) {
  EXPECT_EQ(dedup_syntactic({cand(0, "x(\"a\");"), cand(1, "x(\"b\");")}).size(), 2u);
}

TEST(Dedup, ReformattedDuplicate) {
  auto a = cand(0, "x(1);");
  auto b = a;
  b.sample_index = 1;
  b.method_text = "public   void\ttestS0 ( )\n{\n    // comment\n    x( 1 ) ;\n}";
  EXPECT_EQ(dedup_syntactic({b, a}).size(), 1u);
}

TEST(Dedup, OnlyDeclaredNameIsNormalized) {
  EXPECT_EQ(normalized_tokens("public void testA() { testA(); }"),
            (std::vector<std::string>{"public", "void", "<METHOD>", "(", ")", "{", "testA", "(", ")", ";", "}"}));
}

TEST(ReportMatch, Output) {
  const auto r = report("Parse fails", "createNumber throws NumberFormatException for 0X1234");
  EXPECT_TRUE(match_output_with_report({"java.lang.NumberFormatException", "For input string"}, r));
  EXPECT_FALSE(match_output_with_report({"java.lang.AssertionError", ""}, r));
  const auto r2 = report("NaN", "Got expected:<false> but was:<true> from equals");
  EXPECT_TRUE(match_output_with_report({"junit.framework.AssertionFailedError", "expected:<false> but was:<true>"}, r2));
  EXPECT_TRUE(match_output_with_report({"x.NUMBERFORMATEXCEPTION", ""}, r));
}

TEST(ReportMatch, Test) {
  const auto r = report("isUpperCase fails in tr_TR locale", "Turkish dotless i.");
  auto c = cand(0, "Locale l = new Locale(\"tr\", \"TR\");\nassertEquals(\"tr_TR\", l.toString());");
  EXPECT_TRUE(match_test_with_report(c, r));
  EXPECT_FALSE(match_test_with_report(cand(1, "x(1);"), r));
  const auto r2 = report("ab problem", "");
  EXPECT_FALSE(match_test_with_report(cand(2, "x(\"ab\");"), r2));
  const auto r3 = report("crash", "throws IllegalStateException");
  EXPECT_TRUE(match_test_with_report(cand(3, "try { f(); } catch (IllegalStateException e) { }"), r3));
}

TEST(Rank, HandSimulation) {
  const auto r = report("Overflow", "The result is wrong: boom happens");
  std::vector<Cluster> cs = {cluster("java.lang.AssertionError", "", {cand(0, "a1();", 10), cand(1, "a2();", 12),
                                                                      cand(2, "a2();", 12)}),
                             cluster("java.lang.IllegalStateException", "boom", {cand(3, "b1();", 30), cand(4, "b2();", 31)})};
  cs[0].members.pop_back();
  cs[1].members.pop_back();
  cs[1].size = 2;
  const auto d = select(cs, 1);
  const auto ranked = rank(cs, r, d);
  EXPECT_EQ(indices(ranked), (std::vector<int>{3, 0, 1}));
  EXPECT_TRUE(ranked.ordered[0].br_output_match);
  EXPECT_FALSE(ranked.ordered[1].br_output_match);
  EXPECT_EQ(ranked.ordered[1].cluster_size, 3);
  for (int i = 0; i < 3; ++i) EXPECT_EQ(ranked.ordered[i].rank, i + 1);
}

TEST(Rank, SingleTest) {
  std::vector<Cluster> cs = {cluster("T", "", {cand(4, "x();")})};
  const auto ranked = rank(cs, report("t", ""), select(cs, 0));
  EXPECT_EQ(indices(ranked), std::vector<int>{4});
}

TEST(Rank, StrictAlternation) {
  std::vector<Cluster> cs = {cluster("A", "", {cand(0, "a();"), cand(2, "c();")}),
                             cluster("B", "", {cand(1, "b();"), cand(3, "d();")})};
  const auto ranked = rank(cs, report("t", ""), select(cs, 1));
  EXPECT_EQ(indices(ranked), (std::vector<int>{0, 1, 2, 3}));
  EXPECT_NE(ranked.ordered[0].key, ranked.ordered[1].key);
  EXPECT_NE(ranked.ordered[2].key, ranked.ordered[3].key);
}

TEST(Rank, TestMatchFirstThenShortest) {
  const auto r = report("t", "value \"hello\" breaks");
  std::vector<Cluster> cs = {cluster("A", "", {cand(0, "x(1);", 5), cand(1, "x(2);", 4), cand(2, "x(\"hello\");", 9)})};
  EXPECT_EQ(indices(rank(cs, r, select(cs, 0))), (std::vector<int>{2, 1, 0}));
}

TEST(Rank, SizeCountsBeforeDedup) {
  std::vector<Cluster> cs = {cluster("A", "", {cand(0, "x();"), cand(1, "x();"), cand(2, "x();")}),
                             cluster("B", "", {cand(3, "y();"), cand(4, "z();")})};
  const auto ranked = rank(cs, report("t", ""), select(cs, 2));
  EXPECT_EQ(indices(ranked), (std::vector<int>{0, 3, 4}));
  EXPECT_EQ(ranked.ordered[0].cluster_size, 3);
}

TEST(Rank, NotSelected) {
  std::vector<Cluster> cs = {cluster("A", "", {cand(0, "x();")})};
  try {
    rank(cs, report("t", ""), select(cs, 1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NotSelected);
  }
}

TEST(Rank, MatchesBruteForceReference) {
  std::mt19937_64 rng(1234);
  for (int i = 0; i < 300; ++i) {
    const auto inst = random_instance(rng);
    const auto clusters = cluster_fibs(to_fibs(inst));
    const auto ranked = rank(clusters, inst.report, select(clusters, 0));
    ASSERT_EQ(indices(ranked), reference_ranking(inst)) << "instance " << i;
  }
}

TEST(Rank, Properties) {
  std::mt19937_64 rng(99);
  for (int i = 0; i < 200; ++i) {
    const auto inst = random_instance(rng);
    auto fibs = to_fibs(inst);
    const auto clusters = cluster_fibs(fibs);
    const auto ranked = rank(clusters, inst.report, select(clusters, 0));

    // Prefix of length #clusters (with members left) comes from distinct clusters.
    std::set<FailureKey> keys_with_members;
    for (const auto& e : ranked.ordered) keys_with_members.insert(e.key);
    std::set<FailureKey> seen;
    for (std::size_t k = 0; k < keys_with_members.size(); ++k) EXPECT_TRUE(seen.insert(ranked.ordered[k].key).second);

    std::set<std::vector<std::string>> token_seqs;
    for (const auto& e : ranked.ordered) EXPECT_TRUE(token_seqs.insert(normalized_tokens(e.candidate.method_text)).second);

    std::shuffle(fibs.begin(), fibs.end(), rng);
    const auto shuffled = cluster_fibs(fibs);
    EXPECT_EQ(indices(rank(shuffled, inst.report, select(shuffled, 0))), indices(ranked));
  }
}

TEST(Rank, JsonRoundTrip) {
  std::vector<Cluster> cs = {cluster("A", "m", {cand(0, "x(\"q\");", 7)})};
  const auto ranked = rank(cs, report("t", ""), select(cs, 0));
  const nlohmann::json j = ranked;
  EXPECT_EQ(j["entries"][0]["normalized_message"], "m");
  EXPECT_EQ(j["entries"][0]["token_count"], 7);
  const auto back = j.get<RankedSuggestions>();
  EXPECT_EQ(back.decision, ranked.decision);
  ASSERT_EQ(back.ordered.size(), 1u);
  EXPECT_EQ(back.ordered[0].candidate, ranked.ordered[0].candidate);
  EXPECT_EQ(back.ordered[0].key, ranked.ordered[0].key);
}
