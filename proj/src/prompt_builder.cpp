#include "brt/prompt_builder.hpp"

#include <sstream>

#include "brt/error.hpp"
#include "brt/hash.hpp"

namespace brt {

using nlohmann::json;

std::string_view to_string(ChatMessage::Role role) {
  return role == ChatMessage::Role::System ? "system" : "user";
}

void to_json(json& j, const Prompt& p) {
  j = json{{"id", p.id}, {"stem", p.stem}, {"examples_used", p.examples_used}};
  if (p.text) {
    j["text"] = *p.text;
  } else {
    json msgs = json::array();
    for (const auto& m : p.messages) msgs.push_back({{"role", to_string(m.role)}, {"content", m.content}});
    j["messages"] = msgs;
  }
}

std::size_t approximate_token_count(std::string_view text) {
  std::size_t count = 0;
  bool in_word = false;
  for (unsigned char c : text) {
    const bool space = c == ' ' || c == '\n' || c == '\t' || c == '\r' || c == '\f' || c == '\v';
    if (!space && !in_word) ++count;
    in_word = !space;
  }
  return count;
}

std::string render_report_header(const BugReport& report, bool include_stack_trace,
                                 const std::optional<std::string>& constructor_info) {
  std::string out;
  out += "# " + report.title + "\n";
  out += "## Description\n" + report.description + "\n";
  if (include_stack_trace && report.stack_trace)
    out += "## Stack Trace\n```\n" + *report.stack_trace + "\n```\n";
  if (constructor_info) out += "## Relevant Constructors\n```\n" + *constructor_info + "\n```\n";
  return out;
}

namespace {

std::string reproduction_request() {
  return "\n## Reproduction\n" + std::string(kReproductionInstruction) + "\n```\n" + std::string(kTestStem);
}

void require_title(const BugReport& report) {
  if (report.title.empty()) throw Error(ErrorKind::EmptyTitle, "report " + report.id + " has no title");
}

std::string render_completion_text(const BugReport& report, const PromptConfig& cfg, std::size_t n_examples) {
  std::string text;
  for (std::size_t i = 0; i < n_examples; ++i) text += render_example_block(cfg.examples[i], cfg.include_stack_trace);
  text += render_report_header(report, cfg.include_stack_trace, cfg.constructor_info);
  text += reproduction_request();
  return text;
}

std::vector<ChatMessage> render_chat(const BugReport& report, const PromptConfig& cfg, std::size_t n_examples) {
  std::string system(kChatSystemInstruction);
  if (n_examples > 0) {
    system += "\n\nExamples:\n\n";
    for (std::size_t i = 0; i < n_examples; ++i) system += render_example_block(cfg.examples[i], cfg.include_stack_trace);
  }
  std::string user = render_report_header(report, cfg.include_stack_trace, cfg.constructor_info);
  user += "\n## Reproduction\n" + std::string(kReproductionInstruction) + "\n";
  return {ChatMessage{ChatMessage::Role::System, std::move(system)}, ChatMessage{ChatMessage::Role::User, std::move(user)}};
}

std::size_t fit_examples(const PromptConfig& cfg, auto&& render_size) {
  std::size_t n = cfg.examples.size();
  if (cfg.token_budget == 0) return n;
  while (n > 0 && render_size(n) > cfg.token_budget) --n;
  return n;
}

}  // namespace

std::string render_example_block(const ExampleEntry& example, bool include_stack_trace) {
  std::string_view test = example.reproducing_test;
  if (test.substr(0, kTestStem.size()) == kTestStem) test.remove_prefix(kTestStem.size());
  return render_report_header(example.report, include_stack_trace, std::nullopt) + reproduction_request() +
         std::string(test) + "\n```\n\n";
}

Prompt build_completion_prompt(const BugReport& report, const PromptConfig& cfg) {
  require_title(report);
  const auto n = fit_examples(cfg, [&](std::size_t k) {
    return approximate_token_count(render_completion_text(report, cfg, k));
  });
  Prompt p;
  p.text = render_completion_text(report, cfg, n);
  p.examples_used = n;
  p.id = content_hash(*p.text);
  return p;
}

Prompt build_chat_prompt(const BugReport& report, const PromptConfig& cfg) {
  require_title(report);
  const auto n = fit_examples(cfg, [&](std::size_t k) {
    std::size_t total = 0;
    for (const auto& m : render_chat(report, cfg, k)) total += approximate_token_count(m.content);
    return total;
  });
  Prompt p;
  p.messages = render_chat(report, cfg, n);
  p.examples_used = n;
  std::string keyed;
  for (const auto& m : p.messages) {
    keyed += to_string(m.role);
    keyed += '\0';
    keyed += m.content;
    keyed += '\0';
  }
  p.id = content_hash(keyed);
  return p;
}

Prompt build_prompt(const BugReport& report, const PromptConfig& cfg) {
  return cfg.chat_mode ? build_chat_prompt(report, cfg) : build_completion_prompt(report, cfg);
}

const std::vector<ExampleEntry>& default_examples() {
  static const std::vector<ExampleEntry> kExamples = [] {
    BugReport time24;
    time24.id = "Time-24";
    time24.project_id = "time";
    time24.title = "Incorrect date parsed when week and month used together";
    time24.description =
        "I have following code snippet :\n"
        "\n"
        "DateTimeFormatter dtf = DateTimeFormat.forPattern(\"xxxxMM'w'ww\");\n"
        "DateTime dt = dtf.parseDateTime(\"201101w01\");\n"
        "System.out.println(dt);\n"
        "\n"
        "It should print 2011-01-03 but it is printing 2010-01-04.\n"
        "\n"
        "Please let me know if I am doing something wrong here.";
    ExampleEntry e1{time24,
                    "public void testParseLocalDate_weekyear_month_week_2010() {\n"
                    "    Chronology chrono = GJChronology.getInstanceUTC();\n"
                    "    DateTimeFormatter f = DateTimeFormat.forPattern(\"xxxx-MM-ww\").withChronology(chrono);\n"
                    "    assertEquals(new LocalDate(2010, 1, 4, chrono), f.parseLocalDate(\"2010-01-01\"));\n"
                    "}"};

    BugReport lang1;
    lang1.id = "Lang-1";
    lang1.project_id = "lang";
    lang1.title = "NumberUtils does not handle upper-case hex: 0X and -0X";
    lang1.description =
        "NumberUtils.createNumber() should work equally for 0x1234 and 0X1234; currently 0X1234 generates a "
        "NumberFormatException\n"
        "\n"
        "Integer.decode() handles both upper and lower case hex.";
    ExampleEntry e2{lang1,
                    "public void testCreateNumberUpperCaseHex() {\n"
                    "    assertEquals(Integer.valueOf(0x1234), NumberUtils.createNumber(\"0X1234\"));\n"
                    "    assertEquals(Integer.valueOf(-0x1234), NumberUtils.createNumber(\"-0X1234\"));\n"
                    "}"};
    return std::vector<ExampleEntry>{e1, e2};
  }();
  return kExamples;
}

}  // namespace brt
