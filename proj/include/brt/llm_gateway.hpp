#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "brt/error.hpp"
#include "brt/prompt_builder.hpp"
#include "brt/report_store.hpp"

namespace brt {

struct GenerationConfig {
  std::string provider_id = "replay";
  std::string model;
  double temperature = 0.7;
  int num_samples = 10;
  int max_tokens = 256;
  std::string stop_marker = "```";

  // HTTP provider
  std::string base_url;                 // e.g. http://127.0.0.1:8080/v1
  std::optional<std::string> api_key;   // falls back to BRT_LLM_API_KEY
  bool require_auth = true;
  int timeout_seconds = 120;

  // Replay provider: a JSONL file, or a directory laid out like a workspace.
  std::filesystem::path replay_path;

  int parallelism = 4;
  int max_attempts = 3;            // per sample, transient errors only
  int max_requests_per_bug = 200;  // includes retries
  int min_request_interval_ms = 0;
};

/// Soft cap at 50 samples (warns); throws Error(ConfigError) for values out of range.
void validate(const GenerationConfig& cfg);

void to_json(nlohmann::json& j, const GenerationConfig& c);
void from_json(const nlohmann::json& j, GenerationConfig& c);

struct CandidateTest {
  std::string bug_id;
  int sample_index = 0;
  std::string raw_completion;
  std::string method_text;  // starts with the stem; empty when flagged
  int token_count = 0;
  std::string prompt_id;
  std::optional<std::string> flag;  // EmptyCompletion / NoTestMethodFound; skipped downstream

  bool usable() const { return !flag.has_value(); }
  bool operator==(const CandidateTest&) const = default;
};

void to_json(nlohmann::json& j, const CandidateTest& c);
void from_json(const nlohmann::json& j, CandidateTest& c);

/// Provider-side failure worth retrying (5xx, 429, dropped connection).
class TransientProviderError : public Error {
 public:
  explicit TransientProviderError(const std::string& message) : Error(ErrorKind::ProviderUnavailable, message) {}
};

class Provider {
 public:
  virtual ~Provider() = default;

  /// One raw completion for the given sample slot. Must be thread-safe.
  virtual std::string complete(const Prompt& prompt, const GenerationConfig& cfg, const std::string& bug_id,
                               int sample_index) = 0;

  /// Number of completions available for a bug when the provider is finite.
  virtual std::optional<std::size_t> recorded_count(const std::string& /*bug_id*/) const { return std::nullopt; }
};

/// Serves recorded completions `{bug_id, sample_index, raw_completion}`.
class ReplayProvider : public Provider {
 public:
  explicit ReplayProvider(const std::vector<nlohmann::json>& records);

  /// A JSONL file with records for any number of bugs, or a directory
  /// containing `<bug_id>/generations.jsonl`.
  static std::unique_ptr<ReplayProvider> from_path(const std::filesystem::path& path);

  std::string complete(const Prompt& prompt, const GenerationConfig& cfg, const std::string& bug_id,
                       int sample_index) override;
  std::optional<std::size_t> recorded_count(const std::string& bug_id) const override;

 private:
  void add_records(const std::vector<nlohmann::json>& records);
  std::map<std::string, std::map<int, std::string>> recordings_;
};

/// Completion/chat endpoint speaking the common JSON API:
/// POST {base}/completions or {base}/chat/completions.
class HttpProvider : public Provider {
 public:
  std::string complete(const Prompt& prompt, const GenerationConfig& cfg, const std::string& bug_id,
                       int sample_index) override;

  static nlohmann::json request_body(const Prompt& prompt, const GenerationConfig& cfg);
};

class ProviderRegistry {
 public:
  /// Registry preloaded with "http" (and "replay" when cfg.replay_path is set).
  static ProviderRegistry with_builtins(const GenerationConfig& cfg);

  void add(const std::string& id, std::shared_ptr<Provider> provider);
  /// Throws Error(ProviderUnavailable) for unknown ids.
  std::shared_ptr<Provider> get(const std::string& id) const;

 private:
  std::map<std::string, std::shared_ptr<Provider>> providers_;
};

/// Draws cfg.num_samples completions (per-sample requests, retried on
/// transient errors) and normalizes them. Results are ordered by sample
/// index and, when a workspace is given, persisted to generations.jsonl.
std::vector<CandidateTest> sample(const Prompt& prompt, const GenerationConfig& cfg, Provider& provider,
                                  const std::string& bug_id, const Workspace* workspace = nullptr);

/// stem + raw up to the first stop marker, right-trimmed. A raw completion
/// that already starts with the stem is not prefixed twice.
/// Throws Error(EmptyCompletion) when nothing follows the stem.
std::string trim_completion(std::string_view raw, std::string_view stem = kTestStem,
                            std::string_view stop_marker = "```");

/// First `void test*` method inside the first fenced block of a chat reply
/// (whole reply when unfenced), cut out by brace matching and normalized to
/// start with `public void test`. Throws Error(NoTestMethodFound).
std::string extract_method_from_chat(std::string_view reply);

/// Builds a candidate from a raw completion, flagging unusable ones.
CandidateTest make_candidate(const std::string& bug_id, int sample_index, std::string raw, const Prompt& prompt,
                             const GenerationConfig& cfg);

}  // namespace brt
