#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <json.hpp>

#include "brt/evaluation.hpp"
#include "oracles.hpp"

using namespace brt;

namespace {

BugEvalRecord rec(const std::string& id, std::vector<bool> flags, bool selected = true, int max_size = 2) {
  BugEvalRecord r;
  r.bug_id = id;
  r.ranked_brt_flags = std::move(flags);
  r.num_candidates = 10;
  r.num_fib = static_cast<int>(r.ranked_brt_flags.size());
  r.has_brt = false;
  for (bool b : r.ranked_brt_flags) r.has_brt = r.has_brt || b;
  r.selected = selected;
  r.max_cluster_size = max_size;
  return r;
}

BugEvalRecord auc_rec(int size, bool brt) {
  BugEvalRecord r;
  r.max_cluster_size = size;
  r.has_brt = brt;
  r.selected = size > 1;
  return r;
}

// 350 selected bugs, 219 of them reproduced (149 at rank 1), and 32
// reproduced bugs left unselected.
std::vector<BugEvalRecord> large_dataset() {
  std::vector<BugEvalRecord> out;
  for (int i = 0; i < 350; ++i) {
    std::vector<bool> flags;
    if (i < 149) flags = {true, false};
    else if (i < 219) flags = {false, true};
    else flags = {false, false, false};
    out.push_back(rec("S-" + std::to_string(i), flags, true, 3));
  }
  for (int i = 0; i < 32; ++i) out.push_back(rec("U-" + std::to_string(i), {true}, false, 1));
  for (int i = 0; i < 50; ++i) out.push_back(rec("N-" + std::to_string(i), {}, false, 0));
  return out;
}

}  // namespace

TEST(AccWef, SingleBug) {
  const auto r = acc_wef({rec("A", {false, false, true})}, 3);
  EXPECT_EQ(r.acc, 1);
  EXPECT_EQ(r.wef_sum, 2);
  EXPECT_DOUBLE_EQ(r.wef_mean, 2.0);
}

TEST(AccWef, FirstIsBrt) {
  const auto r = acc_wef({rec("A", {true, false, false, false})}, 1);
  EXPECT_EQ(r.acc, 1);
  EXPECT_EQ(r.wef_sum, 0);
}

TEST(AccWef, MissCountsMinOfNAndLength) {
  EXPECT_EQ(acc_wef({rec("A", {false, false})}, 5).wef_sum, 2);
  EXPECT_EQ(acc_wef({rec("A", {false, false, false, false, false, false})}, 5).wef_sum, 5);
  EXPECT_EQ(acc_wef({rec("A", {false, false, true})}, 2).acc, 0);
  EXPECT_EQ(acc_wef({rec("A", {false, false, true})}, 2).wef_sum, 2);
}

TEST(AccWef, OnlySelectedCount) {
  const auto r = acc_wef({rec("A", {true}, false), rec("B", {false, true}, true)}, 5);
  EXPECT_EQ(r.acc, 1);
  EXPECT_EQ(r.wef_sum, 1);
}

TEST(AccWef, LargeDataset) {
  const auto data = large_dataset();
  const auto r1 = acc_wef(data, 1);
  EXPECT_EQ(r1.acc, 149);
  EXPECT_EQ(r1.wef_sum, 201);
  EXPECT_EQ(acc_wef(data, 3).acc, 219);
}

TEST(PrecisionRecall, LargeDataset) {
  const auto pr = precision_recall(large_dataset());
  EXPECT_EQ(pr.selected, 350);
  EXPECT_EQ(pr.reproduced_selected, 219);
  EXPECT_EQ(pr.reproduced, 251);
  ASSERT_TRUE(pr.precision);
  EXPECT_NEAR(*pr.precision, 0.626, 0.001);
  EXPECT_NEAR(pr.recall, 0.872, 0.001);
}

TEST(PrecisionRecall, NothingSelected) {
  const auto pr = precision_recall({rec("A", {true}, false), rec("B", {false}, false)});
  EXPECT_FALSE(pr.precision);
  EXPECT_DOUBLE_EQ(pr.recall, 0.0);
}

TEST(PrecisionRecall, AllReproducedAndSelected) {
  const auto pr = precision_recall({rec("A", {true}), rec("B", {false, true})});
  EXPECT_DOUBLE_EQ(*pr.precision, 1.0);
  EXPECT_DOUBLE_EQ(pr.recall, 1.0);
}

TEST(PrecisionRecall, NothingReproduced) {
  const auto pr = precision_recall({rec("A", {false})});
  EXPECT_DOUBLE_EQ(*pr.precision, 0.0);
  EXPECT_DOUBLE_EQ(pr.recall, 0.0);
}

TEST(PrecisionRecall, ThresholdOverridesFlags) {
  const std::vector<BugEvalRecord> rs = {rec("A", {true}, false, 5), rec("B", {false}, true, 1)};
  const auto pr = precision_recall(rs, 2);
  EXPECT_EQ(pr.selected, 1);
  EXPECT_EQ(pr.reproduced_selected, 1);
}

TEST(Auc, PerfectSeparation) {
  EXPECT_DOUBLE_EQ(*roc_auc({auc_rec(5, true), auc_rec(4, true), auc_rec(1, false), auc_rec(0, false)}), 1.0);
  EXPECT_DOUBLE_EQ(*roc_auc({auc_rec(0, true), auc_rec(4, false)}), 0.0);
}

TEST(Auc, ConstantScore) {
  EXPECT_DOUBLE_EQ(*roc_auc({auc_rec(2, true), auc_rec(2, false), auc_rec(2, true), auc_rec(2, false)}), 0.5);
}

TEST(Auc, SingleClassIsAbsent) {
  EXPECT_FALSE(roc_auc({auc_rec(2, true), auc_rec(3, true)}));
  EXPECT_FALSE(roc_auc({}));
}

TEST(Auc, MatchesPairwiseDefinition) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 200; ++i) {
    std::vector<BugEvalRecord> rs;
    const int n = 2 + static_cast<int>(rng() % 40);
    for (int k = 0; k < n; ++k) rs.push_back(auc_rec(static_cast<int>(rng() % 8), rng() % 2 == 0));
    rs[0].has_brt = true;
    rs[1].has_brt = false;
    ASSERT_NEAR(*roc_auc(rs), brt::testing::pairwise_auc(rs), 1e-12);
  }
}

TEST(Auc, MonotoneTransformInvariant) {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 50; ++i) {
    std::vector<BugEvalRecord> rs;
    for (int k = 0; k < 20; ++k) rs.push_back(auc_rec(static_cast<int>(rng() % 6), k % 3 == 0));
    auto scaled = rs;
    for (auto& r : scaled) r.max_cluster_size = r.max_cluster_size * r.max_cluster_size * 3 + 1;
    EXPECT_NEAR(*roc_auc(rs), *roc_auc(scaled), 1e-12);
  }
}

TEST(Sweep, SelectionShrinks) {
  std::mt19937_64 rng(3);
  std::vector<BugEvalRecord> rs;
  for (int k = 0; k < 60; ++k) {
    auto r = rec("B" + std::to_string(k), {rng() % 3 == 0}, false, static_cast<int>(rng() % 9));
    rs.push_back(r);
  }
  const auto rows = threshold_sweep(rs, 0, 10);
  ASSERT_EQ(rows.size(), 11u);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    EXPECT_LE(rows[i].selected, rows[i - 1].selected);
    EXPECT_LE(rows[i].reproduced_selected, rows[i - 1].reproduced_selected);
    EXPECT_LE(rows[i].recall, rows[i - 1].recall);
  }
  const auto at1 = precision_recall(rs, 1);
  EXPECT_EQ(rows[1].selected, at1.selected);
  EXPECT_EQ(rows[1].precision, at1.precision);
  EXPECT_EQ(rows[1].recall, at1.recall);
  EXPECT_EQ(rows[8].selected, 0);
  EXPECT_FALSE(rows[8].precision);
}

TEST(Sweep, Csv) {
  std::vector<SweepRow> rows(2);
  rows[0] = {0, 4, 3, 0.75, 1.0};
  rows[1] = {1, 0, 0, std::nullopt, 0.0};
  EXPECT_EQ(sweep_csv(rows), "thr,selected,reproduced_selected,precision,recall\n0,4,3,0.750000,1.000000\n1,0,0,,0.000000\n");
}

TEST(AtThreshold, RecomputesSelection) {
  const auto out = at_threshold({rec("A", {}, false, 3), rec("B", {}, true, 1)}, 1);
  EXPECT_TRUE(out[0].selected);
  EXPECT_FALSE(out[1].selected);
}

TEST(Metrics, ComputeAndJson) {
  std::vector<BugEvalRecord> rs = {rec("A", {true, false}, false, 3), rec("B", {false, false}, false, 2),
                                   rec("C", {}, false, 0), rec("D", {false, true}, false, 1)};
  rs[2].has_brt = false;
  const auto m = compute_metrics(rs, 1, {1, 2});
  EXPECT_EQ(m.selected_bugs, 2);
  EXPECT_EQ(m.reproduced_selected, 1);
  EXPECT_EQ(m.reproduced_bugs, 2);
  EXPECT_EQ(m.total_bugs, 4);
  EXPECT_EQ(m.fib_bugs, 3);
  EXPECT_EQ(m.acc_at_n.at(1), 1);
  EXPECT_EQ(m.wef_at_n_sum.at(1), 1);
  EXPECT_EQ(m.wef_at_n_sum.at(2), 2);
  const nlohmann::json j = m;
  EXPECT_DOUBLE_EQ(j["precision"].get<double>(), 0.5);
  EXPECT_DOUBLE_EQ(j["recall"].get<double>(), 0.5);
  EXPECT_TRUE(j.contains("roc_auc"));
}

TEST(Metrics, RecordJsonRoundTrip) {
  const auto r = rec("X-1", {false, true}, true, 4);
  const nlohmann::json j = r;
  EXPECT_EQ(j.get<BugEvalRecord>(), r);
}

TEST(Baseline, PreBlockWrapped) {
  BugReport r{"B", "t", "Run this:<pre>x();</pre>", std::nullopt, false, "p", std::nullopt};
  const auto out = copy_paste_baseline(r);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0], "public void testFromReport() {\n    x();\n}");
}

TEST(Baseline, NoCode) {
  BugReport r{"B", "t", "It just breaks sometimes.", std::nullopt, false, "p", std::nullopt};
  EXPECT_TRUE(copy_paste_baseline(r).empty());
}

TEST(Baseline, FencedMethodKept) {
  BugReport r{"B", "t", "See\n```java\npublic void testX() {\n  assertTrue(f());\n}\n```\nand <code>a &lt; b</code>",
              std::nullopt, false, "p", std::nullopt};
  const auto out = copy_paste_baseline(r);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0], "public void testX() {\n  assertTrue(f());\n}");
}

TEST(Baseline, EntitiesDecoded) {
  BugReport r{"B", "t", "<pre>assertTrue(a &lt; b &amp;&amp; c);</pre>", std::nullopt, false, "p", std::nullopt};
  EXPECT_EQ(copy_paste_baseline(r).at(0), "public void testFromReport() {\n    assertTrue(a < b && c);\n}");
}
