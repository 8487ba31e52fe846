#include "brt/report_store.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

#include <httplib.h>

#include "brt/code_model.hpp"
#include "brt/error.hpp"

namespace brt {

namespace fs = std::filesystem;
using nlohmann::json;

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const fs::path& path, std::string_view content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error(ErrorKind::IoError, "short write to " + path.string());
}

namespace {

std::string required_string(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) throw Error(ErrorKind::MissingField, key);
  if (!j.at(key).is_string()) throw Error(ErrorKind::MalformedRecord, std::string(key) + " is not a string");
  return j.at(key).get<std::string>();
}

std::optional<std::string> optional_string(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  if (!j.at(key).is_string()) throw Error(ErrorKind::MalformedRecord, std::string(key) + " is not a string");
  return j.at(key).get<std::string>();
}

}  // namespace

void to_json(json& j, const BugReport& r) {
  j = json{{"id", r.id},
           {"title", r.title},
           {"description", r.description},
           {"is_crash", r.is_crash},
           {"project_id", r.project_id}};
  if (r.stack_trace) j["stack_trace"] = *r.stack_trace;
  if (r.source_url) j["source_url"] = *r.source_url;
}

void from_json(const json& j, BugReport& r) {
  if (!j.is_object()) throw Error(ErrorKind::MalformedRecord, "report is not a JSON object");
  r.id = required_string(j, "id");
  if (r.id.empty()) throw Error(ErrorKind::MissingField, "id");
  r.title = required_string(j, "title");
  if (r.title.empty()) throw Error(ErrorKind::MissingField, "title");
  r.description = optional_string(j, "description").value_or("");
  r.project_id = required_string(j, "project_id");
  r.stack_trace = optional_string(j, "stack_trace");
  r.source_url = optional_string(j, "source_url");
  r.is_crash = false;
  if (j.contains("is_crash") && !j.at("is_crash").is_null()) {
    if (!j.at("is_crash").is_boolean()) throw Error(ErrorKind::MalformedRecord, "is_crash is not a boolean");
    r.is_crash = j.at("is_crash").get<bool>();
  }
  if (r.stack_trace) r.is_crash = true;
}

void to_json(json& j, const ExampleEntry& e) {
  j = json{{"report", e.report}, {"reproducing_test", e.reproducing_test}};
}

void from_json(const json& j, ExampleEntry& e) {
  if (!j.is_object() || !j.contains("report")) throw Error(ErrorKind::MissingField, "report");
  e.report = j.at("report").get<BugReport>();
  e.reproducing_test = required_string(j, "reproducing_test");
}

void validate_example(const ExampleEntry& e) {
  if (e.reproducing_test.rfind(kTestStem, 0) != 0)
    throw Error(ErrorKind::InvalidExample, e.report.id + ": test does not start with '" + std::string(kTestStem) + "'");
  const auto tokens = lex_tokens(e.reproducing_test);
  if (!braces_balanced(tokens)) throw Error(ErrorKind::InvalidExample, e.report.id + ": unbalanced braces");
  const auto methods = find_methods(e.reproducing_test);
  if (methods.size() != 1 || methods.front().end != tokens.back().offset + 1)
    throw Error(ErrorKind::InvalidExample, e.report.id + ": test is not a single method");
}

BugReport load_report(const fs::path& path) {
  const auto text = read_text_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& ex) {
    throw Error(ErrorKind::MalformedRecord, path.string() + ": " + ex.what());
  }
  return j.get<BugReport>();
}

void save_report(const fs::path& path, const BugReport& report) {
  write_text_file(path, json(report).dump(2) + "\n");
}

DatasetManifest load_manifest(const fs::path& path) {
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::parse_error& ex) {
    throw Error(ErrorKind::MalformedRecord, path.string() + ": " + ex.what());
  }
  const auto base = path.parent_path();
  DatasetManifest m;
  m.dataset_id = required_string(j, "dataset_id");
  if (!j.contains("reports") || !j.at("reports").is_array()) throw Error(ErrorKind::MissingField, "reports");
  for (const auto& r : j.at("reports")) m.reports.push_back(base / r.get<std::string>());
  if (j.contains("project_configs")) {
    for (const auto& [pid, p] : j.at("project_configs").items()) m.project_configs[pid] = base / p.get<std::string>();
  }
  return m;
}

std::vector<BugReport> load_dataset_reports(const DatasetManifest& manifest) {
  std::vector<BugReport> out;
  std::set<std::string> seen;
  for (const auto& p : manifest.reports) {
    auto r = load_report(p);
    if (!seen.insert(r.id).second) throw Error(ErrorKind::MalformedRecord, "duplicate report id " + r.id);
    if (!manifest.project_configs.count(r.project_id))
      throw Error(ErrorKind::MalformedRecord, "report " + r.id + " references unknown project " + r.project_id);
    out.push_back(std::move(r));
  }
  return out;
}

namespace {

struct IssueLocation {
  std::string origin;  // scheme://host[:port]
  std::string api_path;
  std::string owner;
  std::string repo;
  std::string number;
};

IssueLocation parse_issue_url(const std::string& url) {
  static const std::regex kUrl(R"(^(https?)://([^/:]+)(:\d+)?(/.*)?$)");
  static const std::regex kApiPath(R"(^(.*)/repos/([^/]+)/([^/]+)/issues/(\d+)/?$)");
  static const std::regex kWebPath(R"(^/([^/]+)/([^/]+)/issues/(\d+)/?$)");
  std::smatch m;
  if (!std::regex_match(url, m, kUrl)) throw Error(ErrorKind::UnsupportedTracker, url);
  const std::string scheme = m[1], host = m[2], port = m[3], path = m[4];
  std::smatch pm;
  if (std::regex_match(path, pm, kApiPath)) {
    return {scheme + "://" + host + port, path, pm[2], pm[3], pm[4]};
  }
  if (host == "github.com" && std::regex_match(path, pm, kWebPath)) {
    const std::string api = "/repos/" + pm[1].str() + "/" + pm[2].str() + "/issues/" + pm[3].str();
    return {"https://api.github.com", api, pm[1], pm[2], pm[3]};
  }
  throw Error(ErrorKind::UnsupportedTracker, url);
}

int retry_after_seconds(const httplib::Result& res) {
  if (res->has_header("Retry-After")) {
    try {
      return std::stoi(res->get_header_value("Retry-After"));
    } catch (...) {
    }
  }
  if (res->has_header("X-RateLimit-Reset")) {
    try {
      const long reset = std::stol(res->get_header_value("X-RateLimit-Reset"));
      const long now = static_cast<long>(std::chrono::duration_cast<std::chrono::seconds>(
                                             std::chrono::system_clock::now().time_since_epoch())
                                             .count());
      return static_cast<int>(std::max(0L, reset - now));
    } catch (...) {
    }
  }
  return -1;
}

}  // namespace

BugReport fetch_remote_report(const std::string& issue_url, const RemoteFetchOptions& options) {
  const auto loc = parse_issue_url(issue_url);
  std::optional<std::string> token = options.auth_token;
  if (!token) {
    if (const char* env = std::getenv("BRT_TRACKER_TOKEN"); env && *env) token = env;
  }

  httplib::Client client(loc.origin);
  client.set_connection_timeout(options.timeout_seconds);
  client.set_read_timeout(options.timeout_seconds);
  httplib::Headers headers{{"Accept", "application/vnd.github+json"}, {"User-Agent", "brt"}};
  if (token) headers.emplace("Authorization", "Bearer " + *token);

  auto res = client.Get(loc.api_path, headers);
  if (!res) throw HttpError(0, "request failed: " + httplib::to_string(res.error()));
  const bool exhausted = res->status == 403 && res->get_header_value("X-RateLimit-Remaining") == "0";
  if (res->status == 429 || exhausted)
    throw RateLimitedError(retry_after_seconds(res), "tracker rate limit for " + issue_url);
  if (res->status != 200) throw HttpError(res->status, issue_url);

  json body;
  try {
    body = json::parse(res->body);
  } catch (const json::parse_error& ex) {
    throw Error(ErrorKind::MalformedRecord, std::string("tracker response: ") + ex.what());
  }
  BugReport r;
  const std::string repo = loc.owner + "/" + loc.repo;
  std::string number = loc.number;
  if (body.contains("number") && body.at("number").is_number_integer())
    number = std::to_string(body.at("number").get<long long>());
  r.id = repo + "#" + number;
  r.title = required_string(body, "title");
  r.description = optional_string(body, "body").value_or("");
  r.project_id = repo;
  r.source_url = issue_url;
  return r;
}

std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::Generations: return "generations";
    case Stage::Injections: return "injections";
    case Stage::Outcomes: return "outcomes";
    case Stage::Ranking: return "ranking";
    case Stage::Metrics: return "metrics";
  }
  return "unknown";
}

Stage stage_from_string(std::string_view s) {
  for (auto st : {Stage::Generations, Stage::Injections, Stage::Outcomes, Stage::Ranking, Stage::Metrics})
    if (to_string(st) == s) return st;
  throw Error(ErrorKind::ConfigError, "unknown stage " + std::string(s));
}

void Workspace::validate_bug_id(std::string_view id) {
  if (id.empty() || id == "." || id == ".." || id.find_first_of(std::string_view("/\\\0", 3)) != std::string_view::npos)
    throw Error(ErrorKind::MalformedId, "bug id '" + std::string(id) + "'");
}

fs::path Workspace::bug_dir(std::string_view bug_id) const {
  validate_bug_id(bug_id);
  return root_ / std::string(bug_id);
}

fs::path Workspace::stage_path(std::string_view bug_id, Stage stage) const {
  return bug_dir(bug_id) / (std::string(to_string(stage)) + ".jsonl");
}

fs::path Workspace::persist_record(std::string_view bug_id, Stage stage, const json& record) const {
  const auto path = stage_path(bug_id, stage);
  std::error_code ec;
  fs::create_directories(path.parent_path(), ec);
  if (ec) throw Error(ErrorKind::IoError, "cannot create " + path.parent_path().string() + ": " + ec.message());
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  out << record.dump() << '\n';
  out.flush();
  if (!out) throw Error(ErrorKind::IoError, "write failed: " + path.string());
  return path;
}

std::vector<json> Workspace::read_records(std::string_view bug_id, Stage stage) const {
  const auto path = stage_path(bug_id, stage);
  std::vector<json> out;
  if (!fs::exists(path)) return out;
  std::ifstream in(path, std::ios::binary);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::parse_error& ex) {
      throw Error(ErrorKind::MalformedRecord, path.string() + ":" + std::to_string(lineno) + ": " + ex.what());
    }
  }
  return out;
}

bool Workspace::has_stage(std::string_view bug_id, Stage stage) const {
  return fs::exists(stage_path(bug_id, stage));
}

void Workspace::clear_stage(std::string_view bug_id, Stage stage) const {
  std::error_code ec;
  fs::remove(stage_path(bug_id, stage), ec);
  if (stage == Stage::Injections) fs::remove_all(bug_dir(bug_id) / "patches", ec);
}

fs::path Workspace::patch_path(std::string_view bug_id, int sample_index) const {
  return bug_dir(bug_id) / "patches" / (std::to_string(sample_index) + ".patch");
}

fs::path Workspace::write_patch(std::string_view bug_id, int sample_index, std::string_view patch) const {
  const auto path = patch_path(bug_id, sample_index);
  write_text_file(path, patch);
  return path;
}

}  // namespace brt
