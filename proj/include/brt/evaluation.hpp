#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "brt/report_store.hpp"

namespace brt {

struct BugEvalRecord {
  std::string bug_id;
  int num_candidates = 0;
  int num_fib = 0;
  bool has_brt = false;
  bool selected = false;
  std::vector<bool> ranked_brt_flags;
  int max_cluster_size = 0;

  bool operator==(const BugEvalRecord&) const = default;
};

void to_json(nlohmann::json& j, const BugEvalRecord& r);
void from_json(const nlohmann::json& j, BugEvalRecord& r);

/// Copy with `selected` recomputed as max_cluster_size > thr.
std::vector<BugEvalRecord> at_threshold(std::vector<BugEvalRecord> records, int thr);

struct AccWef {
  int acc = 0;
  long wef_sum = 0;
  double wef_mean = 0.0;
};

/// Over the selected records only. Per bug with first BRT at rank r:
/// hit iff r <= n; wasted effort r-1 on a hit, else min(n, list length).
AccWef acc_wef(const std::vector<BugEvalRecord>& records, int n);

struct PrecisionRecall {
  std::optional<double> precision;  // absent when nothing is selected
  double recall = 0.0;              // 0 when no bug is reproduced
  int selected = 0;
  int reproduced_selected = 0;
  int reproduced = 0;
};

/// Uses the records' `selected` flags as given.
PrecisionRecall precision_recall(const std::vector<BugEvalRecord>& records);
PrecisionRecall precision_recall(const std::vector<BugEvalRecord>& records, int thr);

/// Mann-Whitney AUC of max_cluster_size against has_brt, ties count 1/2.
/// Absent when either class is empty.
std::optional<double> roc_auc(const std::vector<BugEvalRecord>& records);

struct SweepRow {
  int thr = 0;
  int selected = 0;
  int reproduced_selected = 0;
  std::optional<double> precision;
  double recall = 0.0;
};

std::vector<SweepRow> threshold_sweep(const std::vector<BugEvalRecord>& records, int thr_from, int thr_to);

/// `thr,selected,reproduced_selected,precision,recall` with a header row;
/// absent precision is an empty field.
std::string sweep_csv(const std::vector<SweepRow>& rows);

struct MetricsReport {
  int thr = 1;
  std::vector<int> n_values;
  std::map<int, int> acc_at_n;
  std::map<int, long> wef_at_n_sum;
  std::map<int, double> wef_at_n_mean;
  std::optional<double> precision;
  double recall = 0.0;
  std::optional<double> roc_auc;
  int total_bugs = 0;
  int fib_bugs = 0;
  int selected_bugs = 0;
  int reproduced_selected = 0;
  int reproduced_bugs = 0;
};

void to_json(nlohmann::json& j, const MetricsReport& m);

MetricsReport compute_metrics(const std::vector<BugEvalRecord>& records, int thr,
                              const std::vector<int>& n_values = {1, 3, 5});

/// Code blocks from the description (fenced, `<pre>`, `<code>`) turned into
/// test methods: a block holding a method yields that method, a bare
/// statement list is wrapped as `testFromReport`.
std::vector<std::string> copy_paste_baseline(const BugReport& report);

}  // namespace brt
