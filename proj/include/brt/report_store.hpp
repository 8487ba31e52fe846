#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace brt {

struct BugReport {
  std::string id;
  std::string title;
  std::string description;
  std::optional<std::string> stack_trace;
  bool is_crash = false;
  std::string project_id;
  std::optional<std::string> source_url;

  bool operator==(const BugReport&) const = default;
};

void to_json(nlohmann::json& j, const BugReport& r);
/// Validating conversion; throws Error(MissingField) / Error(MalformedRecord).
void from_json(const nlohmann::json& j, BugReport& r);

/// A report paired with the test that reproduces it; used as a few-shot example.
struct ExampleEntry {
  BugReport report;
  std::string reproducing_test;

  bool operator==(const ExampleEntry&) const = default;
};

void to_json(nlohmann::json& j, const ExampleEntry& e);
void from_json(const nlohmann::json& j, ExampleEntry& e);

/// Throws Error(InvalidExample) unless the test is a single brace-balanced
/// method starting with the prompt stem.
void validate_example(const ExampleEntry& e);

BugReport load_report(const std::filesystem::path& path);
void save_report(const std::filesystem::path& path, const BugReport& report);

struct DatasetManifest {
  std::string dataset_id;
  std::vector<std::filesystem::path> reports;                       // report files
  std::map<std::string, std::filesystem::path> project_configs;     // project_id -> config file
};

/// Relative paths inside the manifest resolve against its directory.
DatasetManifest load_manifest(const std::filesystem::path& path);

/// Loads every report and checks that ids are unique and that each
/// project_id resolves. Throws Error(MalformedRecord) naming the offender.
std::vector<BugReport> load_dataset_reports(const DatasetManifest& manifest);

struct RemoteFetchOptions {
  std::optional<std::string> auth_token;  // falls back to BRT_TRACKER_TOKEN
  int timeout_seconds = 30;
};

/// GET <scheme>://<host>/repos/<owner>/<repo>/issues/<n> (github.com issue
/// page URLs are mapped onto api.github.com). Only title and body are used.
BugReport fetch_remote_report(const std::string& issue_url, const RemoteFetchOptions& options = {});

enum class Stage { Generations, Injections, Outcomes, Ranking, Metrics };

std::string_view to_string(Stage s);
Stage stage_from_string(std::string_view s);

/// Append-only per-bug stage records: `<root>/<bug_id>/<stage>.jsonl`.
/// A single writer per bug is assumed.
class Workspace {
 public:
  explicit Workspace(std::filesystem::path root) : root_(std::move(root)) {}

  const std::filesystem::path& root() const { return root_; }

  /// Throws Error(MalformedId) for ids that are empty, `.`/`..`, or contain
  /// a path separator or NUL.
  static void validate_bug_id(std::string_view bug_id);

  std::filesystem::path bug_dir(std::string_view bug_id) const;
  std::filesystem::path stage_path(std::string_view bug_id, Stage stage) const;

  std::filesystem::path persist_record(std::string_view bug_id, Stage stage, const nlohmann::json& record) const;
  std::vector<nlohmann::json> read_records(std::string_view bug_id, Stage stage) const;
  bool has_stage(std::string_view bug_id, Stage stage) const;
  void clear_stage(std::string_view bug_id, Stage stage) const;

  std::filesystem::path patch_path(std::string_view bug_id, int sample_index) const;
  std::filesystem::path write_patch(std::string_view bug_id, int sample_index, std::string_view patch) const;

 private:
  std::filesystem::path root_;
};

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view content);

}  // namespace brt
