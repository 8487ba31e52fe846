#include "brt/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <regex>

#include "brt/code_model.hpp"

namespace brt {

using nlohmann::json;

void to_json(json& j, const BugEvalRecord& r) {
  j = json{{"bug_id", r.bug_id},
           {"num_candidates", r.num_candidates},
           {"num_fib", r.num_fib},
           {"has_brt", r.has_brt},
           {"selected", r.selected},
           {"ranked_brt_flags", r.ranked_brt_flags},
           {"max_cluster_size", r.max_cluster_size}};
}

void from_json(const json& j, BugEvalRecord& r) {
  r.bug_id = j.at("bug_id").get<std::string>();
  r.num_candidates = j.value("num_candidates", 0);
  r.num_fib = j.value("num_fib", 0);
  r.has_brt = j.value("has_brt", false);
  r.selected = j.value("selected", false);
  r.ranked_brt_flags = j.value("ranked_brt_flags", std::vector<bool>{});
  r.max_cluster_size = j.value("max_cluster_size", 0);
}

std::vector<BugEvalRecord> at_threshold(std::vector<BugEvalRecord> records, int thr) {
  for (auto& r : records) r.selected = r.max_cluster_size > thr;
  return records;
}

AccWef acc_wef(const std::vector<BugEvalRecord>& records, int n) {
  AccWef out;
  int selected = 0;
  for (const auto& r : records) {
    if (!r.selected) continue;
    ++selected;
    const auto hit = std::find(r.ranked_brt_flags.begin(), r.ranked_brt_flags.end(), true);
    const long first = hit == r.ranked_brt_flags.end() ? -1 : static_cast<long>(hit - r.ranked_brt_flags.begin()) + 1;
    if (first > 0 && first <= n) {
      ++out.acc;
      out.wef_sum += first - 1;
    } else {
      out.wef_sum += std::min<long>(n, static_cast<long>(r.ranked_brt_flags.size()));
    }
  }
  if (selected > 0) out.wef_mean = static_cast<double>(out.wef_sum) / selected;
  return out;
}

PrecisionRecall precision_recall(const std::vector<BugEvalRecord>& records) {
  PrecisionRecall pr;
  for (const auto& r : records) {
    pr.selected += r.selected;
    pr.reproduced += r.has_brt;
    pr.reproduced_selected += r.selected && r.has_brt;
  }
  if (pr.selected > 0) pr.precision = static_cast<double>(pr.reproduced_selected) / pr.selected;
  if (pr.reproduced > 0) pr.recall = static_cast<double>(pr.reproduced_selected) / pr.reproduced;
  return pr;
}

PrecisionRecall precision_recall(const std::vector<BugEvalRecord>& records, int thr) {
  return precision_recall(at_threshold(records, thr));
}

std::optional<double> roc_auc(const std::vector<BugEvalRecord>& records) {
  std::vector<std::pair<int, bool>> scored;
  long positives = 0;
  for (const auto& r : records) {
    scored.emplace_back(r.max_cluster_size, r.has_brt);
    positives += r.has_brt;
  }
  const long negatives = static_cast<long>(scored.size()) - positives;
  if (positives == 0 || negatives == 0) return std::nullopt;

  // Sum of midranks of the positives.
  std::sort(scored.begin(), scored.end());
  double rank_sum = 0.0;
  std::size_t i = 0;
  while (i < scored.size()) {
    std::size_t j = i;
    while (j < scored.size() && scored[j].first == scored[i].first) ++j;
    const double mid = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k)
      if (scored[k].second) rank_sum += mid;
    i = j;
  }
  const double u = rank_sum - static_cast<double>(positives) * static_cast<double>(positives + 1) / 2.0;
  return u / (static_cast<double>(positives) * static_cast<double>(negatives));
}

std::vector<SweepRow> threshold_sweep(const std::vector<BugEvalRecord>& records, int thr_from, int thr_to) {
  std::vector<SweepRow> rows;
  for (int thr = thr_from; thr <= thr_to; ++thr) {
    const auto pr = precision_recall(records, thr);
    rows.push_back(SweepRow{thr, pr.selected, pr.reproduced_selected, pr.precision, pr.recall});
  }
  return rows;
}

namespace {

std::string fixed6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out = "thr,selected,reproduced_selected,precision,recall\n";
  for (const auto& r : rows) {
    out += std::to_string(r.thr) + "," + std::to_string(r.selected) + "," + std::to_string(r.reproduced_selected) +
           "," + (r.precision ? fixed6(*r.precision) : "") + "," + fixed6(r.recall) + "\n";
  }
  return out;
}

void to_json(json& j, const MetricsReport& m) {
  json acc = json::object(), wsum = json::object(), wmean = json::object();
  for (const auto& [n, v] : m.acc_at_n) acc[std::to_string(n)] = v;
  for (const auto& [n, v] : m.wef_at_n_sum) wsum[std::to_string(n)] = v;
  for (const auto& [n, v] : m.wef_at_n_mean) wmean[std::to_string(n)] = v;
  j = json{{"thr", m.thr},
           {"n_values", m.n_values},
           {"acc_at_n", acc},
           {"wef_at_n_sum", wsum},
           {"wef_at_n_mean", wmean},
           {"precision", m.precision ? json(*m.precision) : json(nullptr)},
           {"recall", m.recall},
           {"roc_auc", m.roc_auc ? json(*m.roc_auc) : json(nullptr)},
           {"counts",
            {{"total_bugs", m.total_bugs},
             {"fib_bugs", m.fib_bugs},
             {"selected_bugs", m.selected_bugs},
             {"reproduced_selected", m.reproduced_selected},
             {"reproduced_bugs", m.reproduced_bugs}}}};
}

MetricsReport compute_metrics(const std::vector<BugEvalRecord>& input, int thr, const std::vector<int>& n_values) {
  const auto records = at_threshold(input, thr);
  MetricsReport m;
  m.thr = thr;
  m.n_values = n_values;
  for (int n : n_values) {
    const auto aw = acc_wef(records, n);
    m.acc_at_n[n] = aw.acc;
    m.wef_at_n_sum[n] = aw.wef_sum;
    m.wef_at_n_mean[n] = aw.wef_mean;
  }
  const auto pr = precision_recall(records);
  m.precision = pr.precision;
  m.recall = pr.recall;
  m.roc_auc = roc_auc(records);
  m.total_bugs = static_cast<int>(records.size());
  for (const auto& r : records) m.fib_bugs += r.num_fib > 0;
  m.selected_bugs = pr.selected;
  m.reproduced_selected = pr.reproduced_selected;
  m.reproduced_bugs = pr.reproduced;
  return m;
}

namespace {

std::string decode_entities(std::string s) {
  static const std::pair<const char*, const char*> kEntities[] = {
      {"&lt;", "<"}, {"&gt;", ">"}, {"&quot;", "\""}, {"&#39;", "'"}, {"&apos;", "'"}, {"&nbsp;", " "}, {"&amp;", "&"}};
  for (const auto& [from, to] : kEntities) {
    std::string out;
    std::size_t pos = 0, hit;
    const std::string f(from);
    while ((hit = s.find(f, pos)) != std::string::npos) {
      out.append(s, pos, hit - pos);
      out += to;
      pos = hit + f.size();
    }
    out.append(s, pos);
    s = std::move(out);
  }
  return s;
}

std::string strip_tags(const std::string& s) {
  static const std::regex tag(R"(<[^>]*>)");
  return std::regex_replace(s, tag, "");
}

std::string to_candidate(const std::string& block) {
  const auto methods = find_methods(block);
  if (!methods.empty()) return block.substr(methods.front().begin, methods.front().end - methods.front().begin);
  const auto toks = lex_tokens(block);
  if (std::none_of(toks.begin(), toks.end(), [](const Token& t) { return t.text == ";"; })) return "";
  std::string body;
  std::size_t start = 0;
  while (start < block.size()) {
    auto nl = block.find('\n', start);
    if (nl == std::string::npos) nl = block.size();
    const auto line = block.substr(start, nl - start);
    if (line.find_first_not_of(" \t\r") != std::string::npos) body += "    " + line + "\n";
    start = nl + 1;
  }
  return "public void testFromReport() {\n" + body + "}";
}

}  // namespace

std::vector<std::string> copy_paste_baseline(const BugReport& report) {
  const std::string& d = report.description;
  std::vector<std::pair<std::size_t, std::string>> blocks;

  // Fenced blocks; the info string after the opening fence is dropped.
  std::vector<std::pair<std::size_t, std::size_t>> fenced_spans;
  std::size_t pos = 0;
  while ((pos = d.find("```", pos)) != std::string::npos) {
    const auto body_start = d.find('\n', pos);
    if (body_start == std::string::npos) break;
    const auto close = d.find("```", body_start + 1);
    if (close == std::string::npos) break;
    blocks.emplace_back(pos, d.substr(body_start + 1, close - body_start - 1));
    fenced_spans.emplace_back(pos, close + 3);
    pos = close + 3;
  }
  auto inside_fence = [&](std::size_t at) {
    return std::any_of(fenced_spans.begin(), fenced_spans.end(),
                       [&](const auto& s) { return at >= s.first && at < s.second; });
  };

  static const std::regex pre(R"(<pre[^>]*>([\s\S]*?)</pre>)", std::regex::icase);
  static const std::regex code(R"(<code[^>]*>([\s\S]*?)</code>)", std::regex::icase);
  std::vector<std::pair<std::size_t, std::size_t>> pre_spans;
  for (auto it = std::sregex_iterator(d.begin(), d.end(), pre); it != std::sregex_iterator(); ++it) {
    const auto at = static_cast<std::size_t>(it->position(0));
    if (inside_fence(at)) continue;
    blocks.emplace_back(at, decode_entities(strip_tags((*it)[1].str())));
    pre_spans.emplace_back(at, at + static_cast<std::size_t>(it->length(0)));
  }
  for (auto it = std::sregex_iterator(d.begin(), d.end(), code); it != std::sregex_iterator(); ++it) {
    const auto at = static_cast<std::size_t>(it->position(0));
    const bool in_pre = std::any_of(pre_spans.begin(), pre_spans.end(),
                                    [&](const auto& s) { return at >= s.first && at < s.second; });
    if (in_pre || inside_fence(at)) continue;
    blocks.emplace_back(at, decode_entities(strip_tags((*it)[1].str())));
  }
  std::sort(blocks.begin(), blocks.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

  std::vector<std::string> out;
  for (const auto& [_, text] : blocks) {
    auto c = to_candidate(text);
    if (!c.empty()) out.push_back(std::move(c));
  }
  return out;
}

}  // namespace brt
