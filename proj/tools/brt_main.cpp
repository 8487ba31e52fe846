#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "brt/error.hpp"
#include "brt/evaluation.hpp"
#include "brt/pipeline.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kBugErrors = 3;

struct RunFlags {
  std::string config;
  std::string bug;
  int jobs = 1;
  std::string thr;
  std::string n;
  bool force = false;
  std::string provider;
};

void add_run_flags(CLI::App* app, RunFlags& f) {
  app->add_option("--config", f.config, "pipeline config (JSON)")->required()->check(CLI::ExistingFile);
  app->add_option("--bug", f.bug, "process a single bug");
  app->add_option("--jobs", f.jobs, "bugs processed in parallel")->check(CLI::PositiveNumber);
  app->add_option("--thr", f.thr, "selection threshold <int> or sweep range <a..b>");
  app->add_option("--n", f.n, "comma-separated n values for acc@n / wef@n");
  app->add_flag("--force", f.force, "recompute stages that already have output");
  app->add_option("--provider", f.provider, "generation provider id");
}

int parse_int(const std::string& s, const char* what) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw brt::Error(brt::ErrorKind::ConfigError, std::string("bad ") + what + " '" + s + "'");
  }
}

brt::PipelineConfig load_config(const RunFlags& f) {
  auto cfg = brt::load_pipeline_config(f.config);
  if (!f.provider.empty()) cfg.generation.provider_id = f.provider;
  if (!f.thr.empty()) {
    const auto dots = f.thr.find("..");
    if (dots == std::string::npos) {
      cfg.selection_thr = parse_int(f.thr, "--thr");
    } else {
      cfg.sweep_from = parse_int(f.thr.substr(0, dots), "--thr");
      cfg.sweep_to = parse_int(f.thr.substr(dots + 2), "--thr");
    }
    if (cfg.selection_thr < 0 || cfg.sweep_from < 0 || cfg.sweep_to < cfg.sweep_from)
      throw brt::Error(brt::ErrorKind::ConfigError, "bad --thr '" + f.thr + "'");
  }
  if (!f.n.empty()) {
    cfg.eval_n_values.clear();
    std::size_t start = 0;
    while (start <= f.n.size()) {
      auto comma = f.n.find(',', start);
      if (comma == std::string::npos) comma = f.n.size();
      const int v = parse_int(f.n.substr(start, comma - start), "--n");
      if (v < 1) throw brt::Error(brt::ErrorKind::ConfigError, "--n values must be positive");
      cfg.eval_n_values.push_back(v);
      start = comma + 1;
    }
  }
  return cfg;
}

int report(const brt::RunSummary& s) {
  if (s.ok()) return kOk;
  std::cerr << s.failures.size() << " of " << s.bugs << " bug(s) failed:\n";
  for (const auto& f : s.failures) std::cerr << "  " << f.bug_id << ": " << f.message << "\n";
  return kBugErrors;
}

std::optional<std::string> bug_of(const RunFlags& f) {
  if (f.bug.empty()) return std::nullopt;
  return f.bug;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Turns bug reports into bug-reproducing test suggestions"};
  app.require_subcommand(1);

  RunFlags pipeline_flags;
  auto* pipeline = app.add_subcommand("pipeline", "run every stage for the dataset");
  add_run_flags(pipeline, pipeline_flags);

  RunFlags stage_flags;
  std::string stage_name;
  auto* stage = app.add_subcommand("stage", "run a single stage");
  stage->add_option("name", stage_name, "prompt|generate|inject|execute|rank|evaluate")
      ->required()
      ->check(CLI::IsMember({"prompt", "generate", "inject", "execute", "rank", "evaluate"}));
  add_run_flags(stage, stage_flags);

  std::string fetch_url, fetch_id, fetch_project, fetch_out, fetch_token;
  auto* fetch = app.add_subcommand("fetch", "download an issue as a report record");
  fetch->add_option("url", fetch_url, "issue URL")->required();
  fetch->add_option("--as-id", fetch_id, "bug id to store the report under");
  fetch->add_option("--project", fetch_project, "project id to attach");
  fetch->add_option("--out", fetch_out, "write the report here instead of stdout");
  fetch->add_option("--token", fetch_token, "tracker token (default: BRT_TRACKER_TOKEN)");

  std::string baseline_report;
  RunFlags baseline_flags;
  auto* baseline = app.add_subcommand("baseline", "print code blocks from reports as candidate tests");
  baseline->add_option("--report", baseline_report, "a single report file")->check(CLI::ExistingFile);
  baseline->add_option("--config", baseline_flags.config, "pipeline config")->check(CLI::ExistingFile);
  baseline->add_option("--bug", baseline_flags.bug, "restrict to one bug");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*pipeline) {
      brt::Pipeline p(load_config(pipeline_flags));
      return report(p.run_all(bug_of(pipeline_flags), pipeline_flags.jobs, pipeline_flags.force));
    }
    if (*stage) {
      brt::Pipeline p(load_config(stage_flags));
      return report(p.run_stage(brt::stage_name_from_string(stage_name), bug_of(stage_flags), stage_flags.jobs,
                                stage_flags.force));
    }
    if (*fetch) {
      brt::RemoteFetchOptions opts;
      if (!fetch_token.empty()) opts.auth_token = fetch_token;
      auto r = brt::fetch_remote_report(fetch_url, opts);
      if (!fetch_id.empty()) r.id = fetch_id;
      if (!fetch_project.empty()) r.project_id = fetch_project;
      if (fetch_out.empty()) std::cout << nlohmann::json(r).dump(2) << "\n";
      else brt::save_report(fetch_out, r);
      return kOk;
    }
    if (*baseline) {
      nlohmann::json out = nlohmann::json::object();
      if (!baseline_report.empty()) {
        const auto r = brt::load_report(baseline_report);
        out[r.id] = brt::copy_paste_baseline(r);
      } else if (!baseline_flags.config.empty()) {
        brt::Pipeline p(brt::load_pipeline_config(baseline_flags.config));
        for (const auto& r : p.reports())
          if (baseline_flags.bug.empty() || r.id == baseline_flags.bug) out[r.id] = brt::copy_paste_baseline(r);
      } else {
        throw brt::Error(brt::ErrorKind::ConfigError, "baseline needs --report or --config");
      }
      std::cout << out.dump(2) << "\n";
      return kOk;
    }
  } catch (const brt::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    switch (e.kind()) {
      case brt::ErrorKind::ConfigError:
      case brt::ErrorKind::MalformedRecord:
      case brt::ErrorKind::MissingField:
      case brt::ErrorKind::MalformedId:
      case brt::ErrorKind::InvalidExample:
      case brt::ErrorKind::IoError:
        return kConfigError;
      default:
        return 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kOk;
}
