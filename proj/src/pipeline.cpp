#include "brt/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <set>
#include <thread>

#include <spdlog/spdlog.h>

#include "brt/error.hpp"

namespace brt {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_relative() ? (base / path).lexically_normal() : path;
}

void require_exists(const fs::path& p, const std::string& what) {
  if (!fs::exists(p)) throw Error(ErrorKind::ConfigError, what + " does not exist: " + p.string());
}

std::vector<ExampleEntry> load_examples(const fs::path& path) {
  const auto text = read_text_file(path);
  std::vector<ExampleEntry> out;
  try {
    if (path.extension() == ".jsonl") {
      std::size_t start = 0;
      while (start < text.size()) {
        auto nl = text.find('\n', start);
        if (nl == std::string::npos) nl = text.size();
        const auto line = text.substr(start, nl - start);
        if (line.find_first_not_of(" \t\r") != std::string::npos) out.push_back(json::parse(line).get<ExampleEntry>());
        start = nl + 1;
      }
    } else {
      out = json::parse(text).get<std::vector<ExampleEntry>>();
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ConfigError, path.string() + ": " + e.what());
  }
  return out;
}

}  // namespace

PromptConfig prompt_config_from_json(const json& j, const fs::path& base) {
  PromptConfig p;
  p.examples = default_examples();
  if (j.contains("examples")) {
    const auto& e = j.at("examples");
    if (e.is_array()) {
      p.examples = e.get<std::vector<ExampleEntry>>();
    } else if (e.is_string() && e.get<std::string>() != "default") {
      const auto path = resolve(base, e.get<std::string>());
      require_exists(path, "examples file");
      p.examples = load_examples(path);
    }
  }
  for (const auto& ex : p.examples) validate_example(ex);
  if (j.contains("num_examples")) {
    const auto k = j.at("num_examples").get<std::size_t>();
    if (k > p.examples.size())
      throw Error(ErrorKind::ConfigError, "num_examples exceeds the " + std::to_string(p.examples.size()) +
                                              " available examples");
    p.examples.resize(k);
  }
  p.include_stack_trace = j.value("include_stack_trace", false);
  if (j.contains("constructor_info") && j.at("constructor_info").is_string())
    p.constructor_info = j.at("constructor_info").get<std::string>();
  p.chat_mode = j.value("chat_mode", false);
  p.token_budget = j.value("token_budget", p.token_budget);
  return p;
}

PipelineConfig load_pipeline_config(const fs::path& path) {
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ConfigError, path.string() + ": " + e.what());
  } catch (const Error& e) {
    throw Error(ErrorKind::ConfigError, e.what());
  }
  const auto base = path.parent_path();
  PipelineConfig c;
  try {
    c.workspace_root = resolve(base, j.at("workspace_root").get<std::string>());
    c.dataset = resolve(base, j.at("dataset").get<std::string>());
    require_exists(c.dataset, "dataset manifest");
    c.prompt = prompt_config_from_json(j.value("prompt", json::object()), base);
    c.generation = j.value("generation", json::object()).get<GenerationConfig>();
    if (!c.generation.replay_path.empty()) {
      c.generation.replay_path = resolve(base, c.generation.replay_path.string());
      require_exists(c.generation.replay_path, "replay_path");
    }
    validate(c.generation);
    c.selection_thr = j.value("selection_thr", 1);
    if (c.selection_thr < 0) throw Error(ErrorKind::ConfigError, "selection_thr must be >= 0");
    c.eval_n_values = j.value("eval_n_values", c.eval_n_values);
    for (int n : c.eval_n_values)
      if (n < 1) throw Error(ErrorKind::ConfigError, "eval_n_values must be positive");
    c.message_abstraction = j.value("message_abstraction", false);
    c.sweep_from = j.value("sweep_from", 0);
    c.sweep_to = j.value("sweep_to", 10);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ConfigError, path.string() + ": " + e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::ConfigError) throw;
    throw Error(ErrorKind::ConfigError, e.what());
  }
  return c;
}

StageName stage_name_from_string(std::string_view s) {
  if (s == "prompt") return StageName::Prompt;
  if (s == "generate") return StageName::Generate;
  if (s == "inject") return StageName::Inject;
  if (s == "execute") return StageName::Execute;
  if (s == "rank") return StageName::Rank;
  if (s == "evaluate") return StageName::Evaluate;
  throw Error(ErrorKind::ConfigError, "unknown stage '" + std::string(s) + "'");
}

Pipeline::Pipeline(PipelineConfig cfg, std::optional<ProviderRegistry> providers)
    : cfg_(std::move(cfg)), workspace_(cfg_.workspace_root), providers_(std::move(providers)) {
  const auto manifest = load_manifest(cfg_.dataset);
  reports_ = load_dataset_reports(manifest);
  project_config_paths_ = manifest.project_configs;
  for (const auto& r : reports_) Workspace::validate_bug_id(r.id);
  if (!providers_) providers_ = ProviderRegistry::with_builtins(cfg_.generation);
}

Pipeline::ProjectState& Pipeline::project(const std::string& project_id) {
  std::lock_guard lock(projects_mu_);
  auto& slot = projects_[project_id];
  if (!slot) {
    const auto it = project_config_paths_.find(project_id);
    if (it == project_config_paths_.end())
      throw Error(ErrorKind::ConfigError, "no project config for '" + project_id + "'");
    slot = std::make_unique<ProjectState>();
    slot->config = load_project_config(it->second);
  }
  if (!slot->indexed) {
    slot->classes = index_test_classes(slot->config.buggy_root, slot->config.test_source_globs);
    slot->index = SourceIndex::build(slot->config.buggy_root, slot->config.source_globs);
    slot->indexed = true;
  }
  return *slot;
}

std::vector<const BugReport*> Pipeline::pick(const std::optional<std::string>& bug) const {
  std::vector<const BugReport*> out;
  for (const auto& r : reports_)
    if (!bug || r.id == *bug) out.push_back(&r);
  if (bug && out.empty()) throw Error(ErrorKind::ConfigError, "bug '" + *bug + "' is not in the dataset");
  return out;
}

RunSummary Pipeline::for_each_bug(const std::optional<std::string>& bug, int jobs,
                                  const std::function<void(const BugReport&)>& fn) {
  const auto bugs = pick(bug);
  RunSummary summary;
  summary.bugs = static_cast<int>(bugs.size());
  std::mutex mu;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next++) < bugs.size();) {
      try {
        fn(*bugs[i]);
      } catch (const std::exception& e) {
        spdlog::error("{}: {}", bugs[i]->id, e.what());
        std::lock_guard lock(mu);
        summary.failures.push_back({bugs[i]->id, e.what()});
      }
    }
  };
  const auto threads =
      std::clamp<std::size_t>(static_cast<std::size_t>(std::max(jobs, 1)), 1, std::max<std::size_t>(bugs.size(), 1));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  std::sort(summary.failures.begin(), summary.failures.end(),
            [](const BugFailure& a, const BugFailure& b) { return a.bug_id < b.bug_id; });
  return summary;
}

RunSummary Pipeline::run_all(const std::optional<std::string>& bug, int jobs, bool force) {
  auto summary = for_each_bug(bug, jobs, [&](const BugReport& r) {
    stage_prompt(r, force);
    stage_generate(r, force);
    stage_inject(r, force);
    stage_execute(r, force);
    stage_rank(r, force);
    stage_evaluate_bug(r, force);
  });
  write_global_metrics();
  return summary;
}

RunSummary Pipeline::run_stage(StageName stage, const std::optional<std::string>& bug, int jobs, bool force) {
  auto summary = for_each_bug(bug, jobs, [&](const BugReport& r) {
    switch (stage) {
      case StageName::Prompt: stage_prompt(r, force); break;
      case StageName::Generate: stage_generate(r, force); break;
      case StageName::Inject: stage_inject(r, force); break;
      case StageName::Execute: stage_execute(r, force); break;
      case StageName::Rank: stage_rank(r, force); break;
      case StageName::Evaluate: stage_evaluate_bug(r, force); break;
    }
  });
  if (stage == StageName::Evaluate) write_global_metrics();
  return summary;
}

namespace {

void require_stage(const Workspace& ws, const std::string& bug, Stage upstream, std::string_view stage) {
  if (!ws.has_stage(bug, upstream))
    throw Error(ErrorKind::MissingUpstreamStage,
                std::string(stage) + " for " + bug + " needs " + std::string(to_string(upstream)) + ".jsonl");
}

void touch_stage(const Workspace& ws, const std::string& bug, Stage stage) {
  if (!ws.has_stage(bug, stage)) write_text_file(ws.stage_path(bug, stage), "");
}

std::vector<CandidateTest> read_generations(const Workspace& ws, const std::string& bug) {
  std::vector<CandidateTest> out;
  for (const auto& j : ws.read_records(bug, Stage::Generations)) out.push_back(j.get<CandidateTest>());
  std::sort(out.begin(), out.end(),
            [](const CandidateTest& a, const CandidateTest& b) { return a.sample_index < b.sample_index; });
  return out;
}

std::vector<ExecutionOutcome> read_outcomes(const Workspace& ws, const std::string& bug) {
  std::vector<ExecutionOutcome> out;
  for (const auto& j : ws.read_records(bug, Stage::Outcomes)) out.push_back(j.get<ExecutionOutcome>());
  return out;
}

std::map<int, InjectionPlan> read_plans(const Workspace& ws, const std::string& bug) {
  std::map<int, InjectionPlan> out;
  for (const auto& j : ws.read_records(bug, Stage::Injections)) {
    auto plan = j.get<InjectionPlan>();
    if (plan.planned()) plan.patch = read_text_file(ws.patch_path(bug, plan.sample_index));
    out[plan.sample_index] = std::move(plan);
  }
  return out;
}

// Rewrites outcomes.jsonl keeping only one version's records.
void keep_outcomes(const Workspace& ws, const std::string& bug, Version keep) {
  const auto records = ws.read_records(bug, Stage::Outcomes);
  ws.clear_stage(bug, Stage::Outcomes);
  touch_stage(ws, bug, Stage::Outcomes);
  for (const auto& j : records)
    if (j.at("version").get<std::string>() == to_string(keep)) ws.persist_record(bug, Stage::Outcomes, j);
}

}  // namespace

void Pipeline::stage_prompt(const BugReport& report, bool force) {
  const auto path = workspace_.bug_dir(report.id) / "prompt.json";
  if (fs::exists(path) && !force) return;
  write_text_file(path, json(build_prompt(report, cfg_.prompt)).dump(2) + "\n");
}

void Pipeline::stage_generate(const BugReport& report, bool force) {
  if (!force && workspace_.has_stage(report.id, Stage::Generations) &&
      workspace_.read_records(report.id, Stage::Generations).size() == static_cast<std::size_t>(cfg_.generation.num_samples))
    return;
  // A partial file is regenerated from scratch so sample indices stay contiguous.
  workspace_.clear_stage(report.id, Stage::Generations);
  const auto prompt = build_prompt(report, cfg_.prompt);
  auto provider = providers_->get(cfg_.generation.provider_id);
  sample(prompt, cfg_.generation, *provider, report.id, &workspace_);
}

void Pipeline::stage_inject(const BugReport& report, bool force) {
  require_stage(workspace_, report.id, Stage::Generations, "inject");
  if (force) workspace_.clear_stage(report.id, Stage::Injections);
  std::set<int> done;
  for (const auto& j : workspace_.read_records(report.id, Stage::Injections)) done.insert(j.at("sample_index").get<int>());
  touch_stage(workspace_, report.id, Stage::Injections);

  const auto candidates = read_generations(workspace_, report.id);
  const bool any_pending = std::any_of(candidates.begin(), candidates.end(), [&](const CandidateTest& c) {
    return c.usable() && !done.count(c.sample_index);
  });
  if (!any_pending) return;
  auto& proj = project(report.project_id);

  for (const auto& cand : candidates) {
    if (!cand.usable() || done.count(cand.sample_index)) continue;
    InjectionPlan plan;
    try {
      const auto match = find_best_matching_class(cand, proj.classes);
      const auto refs = extract_dependencies(cand.method_text);
      const auto resolved = resolve_dependencies(refs, match.class_info, proj.index, proj.config.import_rules);
      plan = inject_into_project(cand, match, resolved.imports, proj.config.buggy_root, proj.config.inject_options());
      plan.unresolved = resolved.unresolved;
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::IoError) throw;
      plan = InjectionPlan{};
      plan.bug_id = report.id;
      plan.sample_index = cand.sample_index;
      plan.status = InjectionPlan::Status::Failed;
      plan.failure_reason = e.what();
    }
    if (plan.planned()) workspace_.write_patch(report.id, plan.sample_index, plan.patch);
    workspace_.persist_record(report.id, Stage::Injections, json(plan));
  }
}

void Pipeline::stage_execute(const BugReport& report, bool force) {
  require_stage(workspace_, report.id, Stage::Injections, "execute");
  if (force) workspace_.clear_stage(report.id, Stage::Outcomes);
  touch_stage(workspace_, report.id, Stage::Outcomes);
  std::set<int> done;
  for (const auto& o : read_outcomes(workspace_, report.id))
    if (o.version == Version::Buggy) done.insert(o.sample_index);

  const auto plans = read_plans(workspace_, report.id);
  const bool any_pending = std::any_of(plans.begin(), plans.end(), [&](const auto& kv) {
    return kv.second.planned() && !done.count(kv.first);
  });
  if (!any_pending) return;
  const auto& config = project(report.project_id).config;
  for (const auto& [index, plan] : plans) {
    if (!plan.planned() || done.count(index)) continue;
    workspace_.persist_record(report.id, Stage::Outcomes, json(execute(plan, config, Version::Buggy)));
  }
}

void Pipeline::stage_rank(const BugReport& report, bool force) {
  require_stage(workspace_, report.id, Stage::Outcomes, "rank");
  if (workspace_.has_stage(report.id, Stage::Ranking) && !force) return;
  workspace_.clear_stage(report.id, Stage::Ranking);

  std::map<int, CandidateTest> by_index;
  for (auto& c : read_generations(workspace_, report.id)) by_index[c.sample_index] = c;

  std::vector<FibEntry> fibs;
  for (const auto& o : read_outcomes(workspace_, report.id)) {
    if (o.version != Version::Buggy || !classify_fib(o)) continue;
    const auto it = by_index.find(o.sample_index);
    if (it == by_index.end())
      throw Error(ErrorKind::MalformedRecord, report.id + ": outcome for unknown sample " + std::to_string(o.sample_index));
    fibs.push_back({it->second, o});
  }
  const auto clusters = cluster_fibs(fibs, cfg_.message_abstraction);
  const auto decision = select(clusters, cfg_.selection_thr);

  json cluster_list = json::array();
  for (const auto& c : clusters)
    cluster_list.push_back({{"failure_type", c.key.failure_type},
                            {"normalized_message", c.key.normalized_message},
                            {"size", c.size},
                            {"report_match", match_output_with_report(c.key, report)}});
  // The ungated ranking is kept so evaluation can sweep thresholds.
  json entries = json::array();
  if (!clusters.empty()) entries = rank(clusters, report, select(clusters, 0)).ordered;

  workspace_.persist_record(report.id, Stage::Ranking,
                            json{{"bug_id", report.id},
                                 {"decision", decision},
                                 {"num_candidates", by_index.size()},
                                 {"num_fib", fibs.size()},
                                 {"clusters", cluster_list},
                                 {"entries", entries}});
}

void Pipeline::stage_evaluate_bug(const BugReport& report, bool force) {
  require_stage(workspace_, report.id, Stage::Ranking, "evaluate");
  const auto rankings = workspace_.read_records(report.id, Stage::Ranking);
  if (rankings.empty()) throw Error(ErrorKind::MalformedRecord, report.id + ": empty ranking");
  const auto& ranking = rankings.back();
  const auto entries = ranking.at("entries").get<std::vector<RankedEntry>>();

  if (force) keep_outcomes(workspace_, report.id, Version::Buggy);
  std::map<int, ExecutionOutcome> fixed;
  for (const auto& o : read_outcomes(workspace_, report.id))
    if (o.version == Version::Fixed) fixed[o.sample_index] = o;

  if (!entries.empty()) {
    const auto& config = project(report.project_id).config;
    if (config.fixed_root) {
      std::map<int, InjectionPlan> plans;
      for (const auto& e : entries) {
        const int i = e.candidate.sample_index;
        if (fixed.count(i)) continue;
        if (plans.empty()) plans = read_plans(workspace_, report.id);
        const auto it = plans.find(i);
        if (it == plans.end())
          throw Error(ErrorKind::MissingUpstreamStage, report.id + ": no injection for sample " + std::to_string(i));
        fixed[i] = execute(it->second, config, Version::Fixed);
        workspace_.persist_record(report.id, Stage::Outcomes, json(fixed[i]));
      }
    }
  }

  BugEvalRecord rec;
  rec.bug_id = report.id;
  rec.num_candidates = ranking.at("num_candidates").get<int>();
  rec.num_fib = ranking.at("num_fib").get<int>();
  const auto decision = ranking.at("decision").get<SelectionDecision>();
  rec.max_cluster_size = decision.max_cluster_size;
  rec.selected = decision.max_cluster_size > cfg_.selection_thr;
  for (const auto& e : entries) {
    const auto it = fixed.find(e.candidate.sample_index);
    rec.ranked_brt_flags.push_back(it != fixed.end() && it->second.status == OutcomeStatus::Pass);
  }
  rec.has_brt = std::find(rec.ranked_brt_flags.begin(), rec.ranked_brt_flags.end(), true) != rec.ranked_brt_flags.end();

  workspace_.clear_stage(report.id, Stage::Metrics);
  workspace_.persist_record(report.id, Stage::Metrics, json(rec));
}

MetricsReport Pipeline::write_global_metrics() {
  std::vector<BugEvalRecord> records;
  for (const auto& r : reports_) {
    const auto recs = workspace_.read_records(r.id, Stage::Metrics);
    if (!recs.empty()) records.push_back(recs.back().get<BugEvalRecord>());
  }
  const auto metrics = compute_metrics(records, cfg_.selection_thr, cfg_.eval_n_values);
  write_text_file(workspace_.root() / "metrics.json", json(metrics).dump(2) + "\n");
  write_text_file(workspace_.root() / "sweep.csv",
                  sweep_csv(threshold_sweep(records, cfg_.sweep_from, cfg_.sweep_to)));
  return metrics;
}

}  // namespace brt
