#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "brt/evaluation.hpp"
#include "brt/llm_gateway.hpp"
#include "brt/prompt_builder.hpp"
#include "brt/rank_select.hpp"
#include "brt/report_store.hpp"
#include "brt/test_runner.hpp"

namespace brt {

struct PipelineConfig {
  std::filesystem::path workspace_root;
  std::filesystem::path dataset;  // manifest
  PromptConfig prompt;
  GenerationConfig generation;
  int selection_thr = 1;
  std::vector<int> eval_n_values = {1, 3, 5};
  bool message_abstraction = false;
  int sweep_from = 0;
  int sweep_to = 10;
};

/// Relative paths resolve against the config file's directory; referenced
/// inputs must exist. Throws Error(ConfigError).
PipelineConfig load_pipeline_config(const std::filesystem::path& path);

/// Prompt section: `examples` is "default", a JSONL/JSON file of
/// {report, reproducing_test} pairs, or an inline array; `num_examples`
/// keeps the first k.
PromptConfig prompt_config_from_json(const nlohmann::json& j, const std::filesystem::path& base);

enum class StageName { Prompt, Generate, Inject, Execute, Rank, Evaluate };

StageName stage_name_from_string(std::string_view s);

struct BugFailure {
  std::string bug_id;
  std::string message;
};

struct RunSummary {
  int bugs = 0;
  std::vector<BugFailure> failures;
  bool ok() const { return failures.empty(); }
};

class Pipeline {
 public:
  explicit Pipeline(PipelineConfig cfg, std::optional<ProviderRegistry> providers = std::nullopt);

  const PipelineConfig& config() const { return cfg_; }
  const Workspace& workspace() const { return workspace_; }
  const std::vector<BugReport>& reports() const { return reports_; }

  /// Every stage in order for the selected bugs, then the global metrics.
  RunSummary run_all(const std::optional<std::string>& bug = std::nullopt, int jobs = 1, bool force = false);

  /// One stage for one bug or all. `evaluate` also writes the global files.
  RunSummary run_stage(StageName stage, const std::optional<std::string>& bug = std::nullopt, int jobs = 1,
                       bool force = false);

  void stage_prompt(const BugReport& report, bool force);
  void stage_generate(const BugReport& report, bool force);
  void stage_inject(const BugReport& report, bool force);
  void stage_execute(const BugReport& report, bool force);
  void stage_rank(const BugReport& report, bool force);
  void stage_evaluate_bug(const BugReport& report, bool force);

  /// Aggregates per-bug metrics into `<workspace>/metrics.json` and `sweep.csv`.
  MetricsReport write_global_metrics();

 private:
  struct ProjectState {
    ProjectConfig config;
    std::vector<TestClassInfo> classes;
    SourceIndex index;
    bool indexed = false;
  };

  ProjectState& project(const std::string& project_id);
  std::vector<const BugReport*> pick(const std::optional<std::string>& bug) const;
  RunSummary for_each_bug(const std::optional<std::string>& bug, int jobs,
                          const std::function<void(const BugReport&)>& fn);

  PipelineConfig cfg_;
  Workspace workspace_;
  std::vector<BugReport> reports_;
  std::map<std::string, std::filesystem::path> project_config_paths_;
  std::optional<ProviderRegistry> providers_;
  std::mutex projects_mu_;
  std::map<std::string, std::unique_ptr<ProjectState>> projects_;
};

}  // namespace brt
