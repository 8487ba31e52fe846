#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "brt/code_model.hpp"
#include "brt/report_store.hpp"

namespace brt {

struct PromptConfig {
  std::vector<ExampleEntry> examples;  // num_examples == examples.size()
  bool include_stack_trace = false;
  std::optional<std::string> constructor_info;
  bool chat_mode = false;
  /// Approximate budget in whitespace-separated words; examples are dropped
  /// last-first until the rendered prompt fits. 0 disables the guard.
  std::size_t token_budget = 7000;

  std::size_t num_examples() const { return examples.size(); }
};

struct ChatMessage {
  enum class Role { System, User };
  Role role = Role::User;
  std::string content;

  bool operator==(const ChatMessage&) const = default;
};

std::string_view to_string(ChatMessage::Role role);

struct Prompt {
  std::string id;                     // content hash
  std::optional<std::string> text;    // completion mode
  std::vector<ChatMessage> messages;  // chat mode
  std::string stem{kTestStem};
  std::size_t examples_used = 0;

  bool is_chat() const { return !text.has_value(); }
};

void to_json(nlohmann::json& j, const Prompt& p);

inline constexpr std::string_view kReproductionInstruction =
    ">Provide a self-contained example that reproduces this issue.";

inline constexpr std::string_view kChatSystemInstruction =
    "You write bug reproducing unit tests. Given a bug report, generate a single self-contained test METHOD, "
    "not a test file: no package declaration, no imports, no enclosing class. The method must start with "
    "`public void test` and be placed in one fenced code block.";

/// Header block for a report: title, description and the optional stack
/// trace / constructor sections, without the reproduction request.
std::string render_report_header(const BugReport& report, bool include_stack_trace,
                                 const std::optional<std::string>& constructor_info);

/// Full example block: header, reproduction request and the example test,
/// closed by its code fence.
std::string render_example_block(const ExampleEntry& example, bool include_stack_trace);

/// Markdown prompt ending in an open code fence and `public void test`.
/// Throws Error(EmptyTitle).
Prompt build_completion_prompt(const BugReport& report, const PromptConfig& cfg);

/// System message holds the instruction and the example blocks; the user
/// message holds the target report. Throws Error(EmptyTitle).
Prompt build_chat_prompt(const BugReport& report, const PromptConfig& cfg);

/// Dispatches on cfg.chat_mode.
Prompt build_prompt(const BugReport& report, const PromptConfig& cfg);

/// The two handpicked report/test pairs shipped as default few-shot examples.
const std::vector<ExampleEntry>& default_examples();

std::size_t approximate_token_count(std::string_view text);

}  // namespace brt
