#pragma once

#include <compare>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "brt/llm_gateway.hpp"
#include "brt/report_store.hpp"
#include "brt/test_runner.hpp"

namespace brt {

struct FailureKey {
  std::string failure_type;
  std::string normalized_message;

  auto operator<=>(const FailureKey&) const = default;
  bool operator==(const FailureKey&) const = default;
};

/// Collapses whitespace runs and trims. With `abstract_volatile`, timestamps
/// become `<TIME>` and hex addresses `<ADDR>` first.
std::string normalize_message(std::string_view message, bool abstract_volatile = false);

FailureKey make_failure_key(const ExecutionOutcome& outcome, bool abstract_volatile = false);

struct FibEntry {
  CandidateTest candidate;
  ExecutionOutcome outcome;  // buggy version, status fail
};

struct Cluster {
  FailureKey key;
  std::vector<CandidateTest> members;  // by sample_index
  int size = 0;                        // before dedup
  bool report_match = false;
};

/// Groups by FailureKey. Clusters come back ordered by their earliest member.
std::vector<Cluster> cluster_fibs(const std::vector<FibEntry>& fibs, bool abstract_volatile = false);

struct SelectionDecision {
  int threshold = 1;
  int max_cluster_size = 0;
  bool selected = false;

  bool operator==(const SelectionDecision&) const = default;
};

/// selected iff the largest cluster is strictly larger than `thr`.
SelectionDecision select(const std::vector<Cluster>& clusters, int thr);

/// Token texts with the declared method name replaced by a placeholder.
std::vector<std::string> normalized_tokens(std::string_view method_text);

/// Keeps the lowest sample_index of every group of token-equal candidates.
/// Output is ordered by sample_index.
std::vector<CandidateTest> dedup_syntactic(std::vector<CandidateTest> candidates);

/// Lower-cased title, description and stack trace joined by newlines.
std::string report_text(const BugReport& report);

bool match_output_with_report(const FailureKey& key, const BugReport& report);
bool match_test_with_report(const CandidateTest& candidate, const BugReport& report);

struct RankedEntry {
  CandidateTest candidate;
  FailureKey key;
  int rank = 0;  // 1-based
  int cluster_size = 0;
  bool br_output_match = false;
  bool br_test_match = false;
  int token_count = 0;
};

struct RankedSuggestions {
  SelectionDecision decision;
  std::vector<RankedEntry> ordered;
};

void to_json(nlohmann::json& j, const SelectionDecision& d);
void from_json(const nlohmann::json& j, SelectionDecision& d);
void to_json(nlohmann::json& j, const RankedEntry& e);
void from_json(const nlohmann::json& j, RankedEntry& e);
void to_json(nlohmann::json& j, const RankedSuggestions& r);
void from_json(const nlohmann::json& j, RankedSuggestions& r);

/// Sorts clusters by (report match, size, shortest member, earliest member),
/// members by (test match, token count, sample index), then interleaves.
/// Throws Error(NotSelected) unless decision.selected.
RankedSuggestions rank(std::vector<Cluster> clusters, const BugReport& report, const SelectionDecision& decision);

}  // namespace brt
