#include "brt/rank_select.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <regex>
#include <set>

#include "brt/code_model.hpp"
#include "brt/error.hpp"

namespace brt {

using nlohmann::json;

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

std::string normalize_message(std::string_view message, bool abstract_volatile) {
  std::string text(message);
  if (abstract_volatile) {
    static const std::regex iso(
        R"(\d{4}-\d{2}-\d{2}(?:[T ]\d{2}:\d{2}(?::\d{2}(?:[.,]\d+)?)?(?:Z|[+-]\d{2}:?\d{2})?)?)");
    static const std::regex clock(R"(\b\d{1,2}:\d{2}:\d{2}(?:[.,]\d+)?\b)");
    static const std::regex epoch(R"(\b1\d{9}(?:\d{3})?\b)");
    static const std::regex hex(R"(\b0[xX][0-9a-fA-F]+\b)");
    static const std::regex identity(R"(@[0-9a-fA-F]{4,}\b)");
    text = std::regex_replace(text, iso, "<TIME>");
    text = std::regex_replace(text, clock, "<TIME>");
    text = std::regex_replace(text, epoch, "<TIME>");
    text = std::regex_replace(text, hex, "<ADDR>");
    text = std::regex_replace(text, identity, "@<ADDR>");
  }
  std::string out;
  bool pending_space = false;
  for (unsigned char c : text) {
    if (std::isspace(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out += ' ';
    pending_space = false;
    out += static_cast<char>(c);
  }
  return out;
}

FailureKey make_failure_key(const ExecutionOutcome& outcome, bool abstract_volatile) {
  return FailureKey{outcome.failure_type.value_or(""),
                    normalize_message(outcome.failure_message.value_or(""), abstract_volatile)};
}

std::vector<Cluster> cluster_fibs(const std::vector<FibEntry>& fibs, bool abstract_volatile) {
  std::map<FailureKey, Cluster> by_key;
  for (const auto& f : fibs) {
    auto key = make_failure_key(f.outcome, abstract_volatile);
    auto& c = by_key[key];
    c.key = key;
    c.members.push_back(f.candidate);
    ++c.size;
  }
  std::vector<Cluster> out;
  for (auto& [_, c] : by_key) {
    std::sort(c.members.begin(), c.members.end(),
              [](const CandidateTest& a, const CandidateTest& b) { return a.sample_index < b.sample_index; });
    out.push_back(std::move(c));
  }
  std::sort(out.begin(), out.end(), [](const Cluster& a, const Cluster& b) {
    return a.members.front().sample_index < b.members.front().sample_index;
  });
  return out;
}

SelectionDecision select(const std::vector<Cluster>& clusters, int thr) {
  if (thr < 0) throw Error(ErrorKind::ConfigError, "threshold must be non-negative");
  SelectionDecision d;
  d.threshold = thr;
  for (const auto& c : clusters) d.max_cluster_size = std::max(d.max_cluster_size, c.size);
  d.selected = d.max_cluster_size > thr;
  return d;
}

std::vector<std::string> normalized_tokens(std::string_view method_text) {
  const auto toks = lex_tokens(method_text);
  std::vector<std::string> out;
  out.reserve(toks.size());
  bool renamed = false;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    const bool is_name = !renamed && toks[i].kind == TokenKind::Identifier && i + 1 < toks.size() &&
                         toks[i + 1].text == "(" && !is_java_keyword(toks[i].text) &&
                         (i == 0 || toks[i - 1].text != "@");
    if (is_name) {
      out.emplace_back("<METHOD>");
      renamed = true;
    } else {
      out.push_back(toks[i].text);
    }
  }
  return out;
}

std::vector<CandidateTest> dedup_syntactic(std::vector<CandidateTest> candidates) {
  std::sort(candidates.begin(), candidates.end(),
            [](const CandidateTest& a, const CandidateTest& b) { return a.sample_index < b.sample_index; });
  std::set<std::vector<std::string>> seen;
  std::vector<CandidateTest> out;
  for (auto& c : candidates)
    if (seen.insert(normalized_tokens(c.method_text)).second) out.push_back(std::move(c));
  return out;
}

std::string report_text(const BugReport& report) {
  std::string text = report.title + "\n" + report.description;
  if (report.stack_trace) text += "\n" + *report.stack_trace;
  return lower(text);
}

bool match_output_with_report(const FailureKey& key, const BugReport& report) {
  const auto text = report_text(report);
  const auto dot = key.failure_type.rfind('.');
  const auto simple = lower(dot == std::string::npos ? key.failure_type : key.failure_type.substr(dot + 1));
  if (!simple.empty() && text.find(simple) != std::string::npos) return true;
  return !key.normalized_message.empty() && text.find(lower(key.normalized_message)) != std::string::npos;
}

bool match_test_with_report(const CandidateTest& candidate, const BugReport& report) {
  std::string text = report.title + "\n" + report.description;
  if (report.stack_trace) text += "\n" + *report.stack_trace;
  DependencyRefs refs;
  try {
    refs = extract_dependencies(candidate.method_text);
  } catch (const Error&) {
    return false;
  }
  for (const auto& lit : refs.string_literals)
    if (lit.size() >= 3 && text.find(lit) != std::string::npos) return true;
  for (const auto& ex : refs.exception_names)
    if (text.find(ex) != std::string::npos) return true;
  return false;
}

void to_json(json& j, const SelectionDecision& d) {
  j = json{{"threshold", d.threshold}, {"max_cluster_size", d.max_cluster_size}, {"selected", d.selected}};
}

void from_json(const json& j, SelectionDecision& d) {
  d.threshold = j.at("threshold").get<int>();
  d.max_cluster_size = j.at("max_cluster_size").get<int>();
  d.selected = j.at("selected").get<bool>();
}

void to_json(json& j, const RankedEntry& e) {
  j = json{{"rank", e.rank},
           {"sample_index", e.candidate.sample_index},
           {"candidate", e.candidate},
           {"failure_type", e.key.failure_type},
           {"normalized_message", e.key.normalized_message},
           {"cluster_size", e.cluster_size},
           {"br_output_match", e.br_output_match},
           {"br_test_match", e.br_test_match},
           {"token_count", e.token_count}};
}

void from_json(const json& j, RankedEntry& e) {
  e.rank = j.at("rank").get<int>();
  e.candidate = j.at("candidate").get<CandidateTest>();
  e.key.failure_type = j.at("failure_type").get<std::string>();
  e.key.normalized_message = j.at("normalized_message").get<std::string>();
  e.cluster_size = j.value("cluster_size", 0);
  e.br_output_match = j.value("br_output_match", false);
  e.br_test_match = j.value("br_test_match", false);
  e.token_count = j.value("token_count", 0);
}

void to_json(json& j, const RankedSuggestions& r) { j = json{{"decision", r.decision}, {"entries", r.ordered}}; }

void from_json(const json& j, RankedSuggestions& r) {
  r.decision = j.at("decision").get<SelectionDecision>();
  r.ordered = j.at("entries").get<std::vector<RankedEntry>>();
}

RankedSuggestions rank(std::vector<Cluster> clusters, const BugReport& report, const SelectionDecision& decision) {
  if (!decision.selected)
    throw Error(ErrorKind::NotSelected, "largest cluster (" + std::to_string(decision.max_cluster_size) +
                                            ") does not exceed threshold " + std::to_string(decision.threshold));

  struct Sorted {
    Cluster cluster;
    int min_tokens = 0;
    int earliest = 0;
    std::vector<RankedEntry> members;
  };

  std::vector<CandidateTest> all;
  for (const auto& c : clusters) all.insert(all.end(), c.members.begin(), c.members.end());
  std::set<int> survivors;
  for (const auto& c : dedup_syntactic(all)) survivors.insert(c.sample_index);

  std::vector<Sorted> sorted;
  for (auto& c : clusters) {
    c.report_match = match_output_with_report(c.key, report);
    Sorted s;
    s.min_tokens = c.members.empty() ? 0 : c.members.front().token_count;
    s.earliest = c.members.empty() ? 0 : c.members.front().sample_index;
    for (const auto& m : c.members) {
      s.min_tokens = std::min(s.min_tokens, m.token_count);
      s.earliest = std::min(s.earliest, m.sample_index);
      if (!survivors.count(m.sample_index)) continue;
      RankedEntry e;
      e.candidate = m;
      e.key = c.key;
      e.cluster_size = c.size;
      e.br_output_match = c.report_match;
      e.br_test_match = match_test_with_report(m, report);
      e.token_count = m.token_count;
      s.members.push_back(std::move(e));
    }
    std::sort(s.members.begin(), s.members.end(), [](const RankedEntry& a, const RankedEntry& b) {
      if (a.br_test_match != b.br_test_match) return a.br_test_match;
      if (a.token_count != b.token_count) return a.token_count < b.token_count;
      return a.candidate.sample_index < b.candidate.sample_index;
    });
    s.cluster = std::move(c);
    sorted.push_back(std::move(s));
  }
  std::sort(sorted.begin(), sorted.end(), [](const Sorted& a, const Sorted& b) {
    if (a.cluster.report_match != b.cluster.report_match) return a.cluster.report_match;
    if (a.cluster.size != b.cluster.size) return a.cluster.size > b.cluster.size;
    if (a.min_tokens != b.min_tokens) return a.min_tokens < b.min_tokens;
    return a.earliest < b.earliest;
  });

  RankedSuggestions out;
  out.decision = decision;
  for (std::size_t i = 0;; ++i) {
    bool any = false;
    for (const auto& s : sorted) {
      if (i >= s.members.size()) continue;
      any = true;
      out.ordered.push_back(s.members[i]);
      out.ordered.back().rank = static_cast<int>(out.ordered.size());
    }
    if (!any) break;
  }
  return out;
}

}  // namespace brt
