#include "brt/llm_gateway.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <regex>
#include <thread>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "brt/code_model.hpp"

namespace brt {

namespace fs = std::filesystem;
using nlohmann::json;

void validate(const GenerationConfig& cfg) {
  if (!(cfg.temperature >= 0.0 && cfg.temperature <= 2.0))
    throw Error(ErrorKind::ConfigError, "temperature must be in [0, 2]");
  if (cfg.num_samples < 1) throw Error(ErrorKind::ConfigError, "num_samples must be >= 1");
  if (cfg.max_tokens < 1) throw Error(ErrorKind::ConfigError, "max_tokens must be >= 1");
  if (cfg.stop_marker.empty()) throw Error(ErrorKind::ConfigError, "stop_marker must not be empty");
  if (cfg.parallelism < 1 || cfg.max_attempts < 1) throw Error(ErrorKind::ConfigError, "parallelism/max_attempts < 1");
  if (cfg.num_samples > 50) spdlog::warn("num_samples={} exceeds the soft cap of 50", cfg.num_samples);
}

void to_json(json& j, const GenerationConfig& c) {
  j = json{{"provider_id", c.provider_id},
           {"model", c.model},
           {"temperature", c.temperature},
           {"num_samples", c.num_samples},
           {"max_tokens", c.max_tokens},
           {"stop_marker", c.stop_marker},
           {"base_url", c.base_url},
           {"require_auth", c.require_auth},
           {"timeout_seconds", c.timeout_seconds},
           {"replay_path", c.replay_path.string()},
           {"parallelism", c.parallelism},
           {"max_attempts", c.max_attempts},
           {"max_requests_per_bug", c.max_requests_per_bug},
           {"min_request_interval_ms", c.min_request_interval_ms}};
}

void from_json(const json& j, GenerationConfig& c) {
  GenerationConfig d;
  c.provider_id = j.value("provider_id", d.provider_id);
  c.model = j.value("model", d.model);
  c.temperature = j.value("temperature", d.temperature);
  c.num_samples = j.value("num_samples", d.num_samples);
  c.max_tokens = j.value("max_tokens", d.max_tokens);
  c.stop_marker = j.value("stop_marker", d.stop_marker);
  c.base_url = j.value("base_url", d.base_url);
  if (j.contains("api_key") && j.at("api_key").is_string()) c.api_key = j.at("api_key").get<std::string>();
  c.require_auth = j.value("require_auth", d.require_auth);
  c.timeout_seconds = j.value("timeout_seconds", d.timeout_seconds);
  c.replay_path = j.value("replay_path", std::string());
  c.parallelism = j.value("parallelism", d.parallelism);
  c.max_attempts = j.value("max_attempts", d.max_attempts);
  c.max_requests_per_bug = j.value("max_requests_per_bug", d.max_requests_per_bug);
  c.min_request_interval_ms = j.value("min_request_interval_ms", d.min_request_interval_ms);
}

void to_json(json& j, const CandidateTest& c) {
  j = json{{"bug_id", c.bug_id},
           {"sample_index", c.sample_index},
           {"raw_completion", c.raw_completion},
           {"method_text", c.method_text},
           {"token_count", c.token_count},
           {"prompt_id", c.prompt_id},
           {"flag", c.flag ? json(*c.flag) : json(nullptr)}};
}

void from_json(const json& j, CandidateTest& c) {
  c.bug_id = j.at("bug_id").get<std::string>();
  c.sample_index = j.at("sample_index").get<int>();
  c.raw_completion = j.at("raw_completion").get<std::string>();
  c.method_text = j.value("method_text", std::string());
  c.token_count = j.value("token_count", 0);
  c.prompt_id = j.value("prompt_id", std::string());
  c.flag.reset();
  if (j.contains("flag") && j.at("flag").is_string()) c.flag = j.at("flag").get<std::string>();
}

// ---------------------------------------------------------------------------
// Normalization

namespace {

std::string_view rtrim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

std::string trim_completion(std::string_view raw, std::string_view stem, std::string_view stop_marker) {
  std::string_view body = raw;
  if (body.substr(0, stem.size()) == stem) body.remove_prefix(stem.size());
  if (!stop_marker.empty()) {
    if (const auto pos = body.find(stop_marker); pos != std::string_view::npos) body = body.substr(0, pos);
  }
  body = rtrim(body);
  if (body.find_first_not_of(" \t\r\n\f\v") == std::string_view::npos)
    throw Error(ErrorKind::EmptyCompletion, "completion has nothing beyond the stem");
  return std::string(stem) + std::string(body);
}

std::string extract_method_from_chat(std::string_view reply) {
  std::string_view block = reply;
  if (const auto open = reply.find("```"); open != std::string_view::npos) {
    auto start = reply.find('\n', open);
    start = start == std::string_view::npos ? reply.size() : start + 1;
    const auto close = reply.find("```", start);
    block = reply.substr(start, close == std::string_view::npos ? std::string_view::npos : close - start);
  }
  const auto tokens = lex_tokens(block);
  for (const auto& m : find_methods(block)) {
    if (m.name.rfind("test", 0) != 0) continue;
    // Require a `void` return type directly before the name.
    const Token* name_tok = nullptr;
    const Token* prev = nullptr;
    for (const auto& t : tokens) {
      if (t.offset < m.begin) continue;
      if (t.offset >= m.end) break;
      if (t.text == m.name && t.kind == TokenKind::Identifier) {
        name_tok = &t;
        break;
      }
      prev = &t;
    }
    if (!name_tok || !prev || prev->text != "void") continue;
    const std::string_view rest = block.substr(name_tok->offset + 4, m.end - name_tok->offset - 4);
    return std::string(kTestStem) + std::string(rest);
  }
  throw Error(ErrorKind::NoTestMethodFound, "chat reply contains no test method");
}

CandidateTest make_candidate(const std::string& bug_id, int sample_index, std::string raw, const Prompt& prompt,
                             const GenerationConfig& cfg) {
  CandidateTest c;
  c.bug_id = bug_id;
  c.sample_index = sample_index;
  c.prompt_id = prompt.id;
  c.raw_completion = std::move(raw);
  try {
    c.method_text = prompt.is_chat() ? extract_method_from_chat(c.raw_completion)
                                     : trim_completion(c.raw_completion, prompt.stem, cfg.stop_marker);
    c.token_count = static_cast<int>(lex_tokens(c.method_text).size());
  } catch (const Error& e) {
    c.flag = std::string(to_string(e.kind()));
    c.method_text.clear();
    c.token_count = 0;
  }
  return c;
}

// ---------------------------------------------------------------------------
// Providers

ReplayProvider::ReplayProvider(const std::vector<json>& records) { add_records(records); }

void ReplayProvider::add_records(const std::vector<json>& records) {
  for (const auto& r : records) {
    if (!r.contains("bug_id") || !r.contains("sample_index") || !r.contains("raw_completion"))
      throw Error(ErrorKind::MalformedRecord, "replay record needs bug_id, sample_index, raw_completion");
    recordings_[r.at("bug_id").get<std::string>()][r.at("sample_index").get<int>()] =
        r.at("raw_completion").get<std::string>();
  }
}

namespace {

std::vector<json> read_jsonl(const fs::path& path) {
  std::vector<json> out;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot read " + path.string());
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::parse_error& e) {
      throw Error(ErrorKind::MalformedRecord, path.string() + ": " + e.what());
    }
  }
  return out;
}

}  // namespace

std::unique_ptr<ReplayProvider> ReplayProvider::from_path(const fs::path& path) {
  if (fs::is_directory(path)) {
    auto p = std::make_unique<ReplayProvider>(std::vector<json>{});
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(path)) {
      const auto f = entry.path() / "generations.jsonl";
      if (entry.is_directory() && fs::exists(f)) files.push_back(f);
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) p->add_records(read_jsonl(f));
    return p;
  }
  return std::make_unique<ReplayProvider>(read_jsonl(path));
}

std::string ReplayProvider::complete(const Prompt&, const GenerationConfig&, const std::string& bug_id,
                                     int sample_index) {
  const auto bug = recordings_.find(bug_id);
  if (bug != recordings_.end()) {
    if (const auto it = bug->second.find(sample_index); it != bug->second.end()) return it->second;
  }
  throw Error(ErrorKind::InsufficientRecordings,
              "no recording for " + bug_id + " sample " + std::to_string(sample_index));
}

std::optional<std::size_t> ReplayProvider::recorded_count(const std::string& bug_id) const {
  const auto bug = recordings_.find(bug_id);
  return bug == recordings_.end() ? 0 : bug->second.size();
}

json HttpProvider::request_body(const Prompt& prompt, const GenerationConfig& cfg) {
  json body{{"model", cfg.model}, {"temperature", cfg.temperature}, {"n", 1}, {"max_tokens", cfg.max_tokens}};
  if (prompt.is_chat()) {
    // Chat replies open their own fence, so the stop marker would cut them empty.
    json msgs = json::array();
    for (const auto& m : prompt.messages) msgs.push_back({{"role", to_string(m.role)}, {"content", m.content}});
    body["messages"] = msgs;
  } else {
    body["prompt"] = *prompt.text;
    body["stop"] = json::array({cfg.stop_marker});
  }
  return body;
}

std::string HttpProvider::complete(const Prompt& prompt, const GenerationConfig& cfg, const std::string&, int) {
  static const std::regex kBase(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(cfg.base_url, m, kBase))
    throw Error(ErrorKind::ConfigError, "invalid base_url '" + cfg.base_url + "'");
  std::string base_path = m[2].str();
  while (!base_path.empty() && base_path.back() == '/') base_path.pop_back();

  std::optional<std::string> key = cfg.api_key;
  if (!key) {
    if (const char* env = std::getenv("BRT_LLM_API_KEY"); env && *env) key = env;
  }
  if (!key && cfg.require_auth) throw Error(ErrorKind::AuthMissing, "set BRT_LLM_API_KEY");

  httplib::Client client(m[1].str());
  client.set_connection_timeout(cfg.timeout_seconds);
  client.set_read_timeout(cfg.timeout_seconds);
  httplib::Headers headers;
  if (key) headers.emplace("Authorization", "Bearer " + *key);

  const std::string path = base_path + (prompt.is_chat() ? "/chat/completions" : "/completions");
  auto res = client.Post(path, headers, request_body(prompt, cfg).dump(), "application/json");
  if (!res) throw TransientProviderError("request failed: " + httplib::to_string(res.error()));
  if (res->status == 429 || res->status >= 500)
    throw TransientProviderError("provider returned " + std::to_string(res->status));
  if (res->status == 401 || res->status == 403) throw Error(ErrorKind::AuthMissing, "provider rejected credentials");
  if (res->status != 200) throw Error(ErrorKind::ProviderUnavailable, "provider returned " + std::to_string(res->status));

  try {
    const auto j = json::parse(res->body);
    const auto& choice = j.at("choices").at(0);
    if (choice.contains("text")) return choice.at("text").get<std::string>();
    return choice.at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ProviderUnavailable, std::string("unexpected provider response: ") + e.what());
  }
}

ProviderRegistry ProviderRegistry::with_builtins(const GenerationConfig& cfg) {
  ProviderRegistry reg;
  reg.add("http", std::make_shared<HttpProvider>());
  if (!cfg.replay_path.empty()) reg.add("replay", ReplayProvider::from_path(cfg.replay_path));
  return reg;
}

void ProviderRegistry::add(const std::string& id, std::shared_ptr<Provider> provider) {
  providers_[id] = std::move(provider);
}

std::shared_ptr<Provider> ProviderRegistry::get(const std::string& id) const {
  const auto it = providers_.find(id);
  if (it == providers_.end()) throw Error(ErrorKind::ProviderUnavailable, "no provider registered as '" + id + "'");
  return it->second;
}

// ---------------------------------------------------------------------------
// Sampling

std::vector<CandidateTest> sample(const Prompt& prompt, const GenerationConfig& cfg, Provider& provider,
                                  const std::string& bug_id, const Workspace* workspace) {
  validate(cfg);
  const auto n = static_cast<std::size_t>(cfg.num_samples);
  if (const auto have = provider.recorded_count(bug_id); have && *have < n)
    throw Error(ErrorKind::InsufficientRecordings,
                bug_id + ": " + std::to_string(*have) + "<" + std::to_string(n));

  std::vector<std::string> raws(n);
  std::atomic<std::size_t> next{0};
  std::atomic<int> requests{0};
  std::mutex mu;  // guards failure and the rate limiter
  std::exception_ptr failure;
  auto next_slot = std::chrono::steady_clock::now();

  auto throttle = [&] {
    if (cfg.min_request_interval_ms <= 0) return;
    std::chrono::steady_clock::time_point slot;
    {
      std::lock_guard lock(mu);
      slot = std::max(next_slot, std::chrono::steady_clock::now());
      next_slot = slot + std::chrono::milliseconds(cfg.min_request_interval_ms);
    }
    std::this_thread::sleep_until(slot);
  };

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next++;
      if (i >= n) return;
      {
        std::lock_guard lock(mu);
        if (failure) return;
      }
      try {
        for (int attempt = 1;; ++attempt) {
          if (++requests > cfg.max_requests_per_bug)
            throw Error(ErrorKind::BudgetExceeded, bug_id + ": more than " +
                                                       std::to_string(cfg.max_requests_per_bug) + " requests");
          throttle();
          try {
            raws[i] = provider.complete(prompt, cfg, bug_id, static_cast<int>(i));
            break;
          } catch (const TransientProviderError& e) {
            if (attempt >= cfg.max_attempts) throw;
            spdlog::warn("{} sample {}: {} (attempt {}/{})", bug_id, i, e.what(), attempt, cfg.max_attempts);
            std::this_thread::sleep_for(std::chrono::milliseconds(50 * attempt));
          }
        }
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };

  const auto threads = std::min<std::size_t>(static_cast<std::size_t>(cfg.parallelism), n);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<CandidateTest> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(make_candidate(bug_id, static_cast<int>(i), raws[i], prompt, cfg));
  if (workspace) {
    for (const auto& c : out) workspace->persist_record(bug_id, Stage::Generations, json(c));
  }
  return out;
}

}  // namespace brt
