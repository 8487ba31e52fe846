#include "brt/code_model.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <regex>
#include <sstream>

#include <spdlog/spdlog.h>

#include "brt/error.hpp"

namespace brt {

namespace fs = std::filesystem;

namespace {

bool is_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_ident_start(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_' || c == '$' || c >= 0x80;
}

bool is_digit(unsigned char c) { return c >= '0' && c <= '9'; }

bool is_ident_part(unsigned char c) { return is_ident_start(c) || is_digit(c); }

// Longest first.
constexpr std::array<std::string_view, 25> kMultiCharOps = {
    ">>>=", "<<=", ">>=", ">>>", "...", "->", "::", "++", "--", "&&", "||", "==", "!=",
    "<=",   ">=",  "+=",  "-=",  "*=",  "/=", "&=", "|=", "^=", "%=", "<<", ">>"};

constexpr std::string_view kSingleCharOps = "(){}[];,.@=><!~?:+-*/&|^%";

// Index one past the closing delimiter, or s.size() when unterminated.
std::size_t scan_quoted(std::string_view s, std::size_t start, std::string_view delim) {
  std::size_t i = start;
  while (i < s.size()) {
    if (s[i] == '\\') {
      i += 2;
      continue;
    }
    if (s.compare(i, delim.size(), delim) == 0) return i + delim.size();
    ++i;
  }
  return s.size();
}

std::size_t scan_number(std::string_view s, std::size_t i) {
  const bool hex = s[i] == '0' && i + 1 < s.size() && (s[i + 1] == 'x' || s[i + 1] == 'X');
  while (i < s.size()) {
    const unsigned char c = s[i];
    if (is_ident_part(c) && c < 0x80) {
      ++i;
      if (i < s.size() && (s[i] == '+' || s[i] == '-')) {
        const bool exponent = hex ? (c == 'p' || c == 'P') : (c == 'e' || c == 'E');
        if (exponent) ++i;
      }
    } else if (c == '.') {
      ++i;
    } else {
      break;
    }
  }
  return i;
}

}  // namespace

std::vector<Token> lex_tokens(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  const std::size_t n = s.size();
  while (i < n) {
    const unsigned char c = s[i];
    if (is_space(c)) {
      ++i;
      continue;
    }
    if (c == '/' && i + 1 < n && s[i + 1] == '/') {
      while (i < n && s[i] != '\n') ++i;
      continue;
    }
    if (c == '/' && i + 1 < n && s[i + 1] == '*') {
      const auto close = s.find("*/", i + 2);
      i = close == std::string_view::npos ? n : close + 2;
      continue;
    }
    const std::size_t start = i;
    TokenKind kind;
    if (s.compare(i, 3, "\"\"\"") == 0) {
      i = scan_quoted(s, i + 3, "\"\"\"");
      kind = TokenKind::String;
    } else if (c == '"') {
      i = scan_quoted(s, i + 1, "\"");
      kind = TokenKind::String;
    } else if (c == '\'') {
      i = scan_quoted(s, i + 1, "'");
      kind = TokenKind::Char;
    } else if (is_ident_start(c)) {
      while (i < n && is_ident_part(static_cast<unsigned char>(s[i]))) ++i;
      kind = TokenKind::Identifier;
    } else if (is_digit(c) || (c == '.' && i + 1 < n && is_digit(static_cast<unsigned char>(s[i + 1])))) {
      i = scan_number(s, i);
      kind = TokenKind::Number;
    } else {
      kind = TokenKind::Other;
      for (auto op : kMultiCharOps) {
        if (s.compare(i, op.size(), op) == 0) {
          i += op.size();
          kind = TokenKind::Operator;
          break;
        }
      }
      if (kind == TokenKind::Other) {
        if (kSingleCharOps.find(static_cast<char>(c)) != std::string_view::npos) kind = TokenKind::Operator;
        ++i;
      }
    }
    out.push_back(Token{std::string(s.substr(start, i - start)), start, kind});
  }
  return out;
}

std::vector<std::string> lex(std::string_view source) {
  std::vector<std::string> out;
  for (auto& t : lex_tokens(source)) out.push_back(std::move(t.text));
  return out;
}

TokenSet token_set(std::string_view source) {
  TokenSet out;
  for (auto& t : lex_tokens(source)) out.insert(std::move(t.text));
  return out;
}

bool is_java_keyword(std::string_view w) {
  static const std::set<std::string_view> kKeywords = {
      "abstract", "assert",     "boolean",   "break",     "byte",      "case",       "catch",
      "char",     "class",      "const",     "continue",  "default",   "do",         "double",
      "else",     "enum",       "extends",   "final",     "finally",   "float",      "for",
      "goto",     "if",         "implements", "import",   "instanceof", "int",       "interface",
      "long",     "native",     "new",       "package",   "private",   "protected",  "public",
      "return",   "short",      "static",    "strictfp",  "super",     "switch",     "synchronized",
      "this",     "throw",      "throws",    "transient", "try",       "void",       "volatile",
      "while",    "true",       "false",     "null",      "var"};
  return kKeywords.count(w) > 0;
}

bool is_capitalized_identifier(std::string_view w) {
  if (w.empty() || !(w[0] >= 'A' && w[0] <= 'Z')) return false;
  return std::all_of(w.begin(), w.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
  });
}

bool braces_balanced(const std::vector<Token>& tokens) {
  long depth = 0;
  for (const auto& t : tokens) {
    if (t.text == "{") ++depth;
    if (t.text == "}" && --depth < 0) return false;
  }
  return depth == 0;
}

bool braces_balanced(std::string_view source) { return braces_balanced(lex_tokens(source)); }

std::string strip_literal_quotes(std::string_view lit) {
  if (lit.size() >= 6 && lit.substr(0, 3) == "\"\"\"" && lit.substr(lit.size() - 3) == "\"\"\"")
    return std::string(lit.substr(3, lit.size() - 6));
  if (lit.size() >= 2 && lit.front() == lit.back() && (lit.front() == '"' || lit.front() == '\''))
    return std::string(lit.substr(1, lit.size() - 2));
  if (!lit.empty() && (lit.front() == '"' || lit.front() == '\'')) return std::string(lit.substr(1));
  return std::string(lit);
}

namespace {

bool is_ident(const Token& t) { return t.kind == TokenKind::Identifier; }

bool is_plain_ident(const Token& t) { return is_ident(t) && !is_java_keyword(t.text); }

bool is_type_name(const Token& t) { return is_ident(t) && is_capitalized_identifier(t.text); }

int angle_delta(std::string_view op) {
  if (op == "<") return 1;
  if (op == ">") return -1;
  if (op == ">>") return -2;
  if (op == ">>>") return -3;
  return 0;
}

// If tokens[open] is `<` starting a well-formed type-argument list, returns
// the index one past its closing `>`; otherwise npos.
std::size_t skip_type_arguments(const std::vector<Token>& t, std::size_t open) {
  if (open >= t.size() || t[open].text != "<") return std::string::npos;
  int depth = 0;
  for (std::size_t j = open; j < t.size(); ++j) {
    const auto& x = t[j].text;
    const int d = angle_delta(x);
    if (d != 0) {
      depth += d;
      if (depth <= 0) return depth == 0 ? j + 1 : std::string::npos;
      continue;
    }
    const bool allowed = is_ident(t[j]) || x == "." || x == "," || x == "?" || x == "[" || x == "]" ||
                         x == "&" || x == "@";
    if (!allowed) return std::string::npos;
  }
  return std::string::npos;
}

std::size_t skip_array_dims(const std::vector<Token>& t, std::size_t j) {
  while (j + 1 < t.size() && t[j].text == "[" && t[j + 1].text == "]") j += 2;
  if (j < t.size() && t[j].text == "...") ++j;
  return j;
}

bool is_exception_like(std::string_view name) {
  auto ends_with = [&](std::string_view suf) {
    return name.size() >= suf.size() && name.substr(name.size() - suf.size()) == suf;
  };
  return ends_with("Exception") || ends_with("Error") || ends_with("Throwable");
}

}  // namespace

DependencyRefs extract_dependencies(std::string_view method_text) {
  const auto t = lex_tokens(method_text);
  if (!braces_balanced(t)) throw Error(ErrorKind::UnbalancedBraces, "generated method has unbalanced braces");

  DependencyRefs refs;
  auto add_type = [&](const Token& tok) {
    if (is_type_name(tok)) refs.type_names.insert(tok.text);
  };
  auto add_type_args = [&](std::size_t open, std::size_t close) {
    for (std::size_t k = open; k < close; ++k) add_type(t[k]);
  };

  for (std::size_t i = 0; i < t.size(); ++i) {
    const auto& tok = t[i];
    const std::string& x = tok.text;
    const bool after_dot = i > 0 && t[i - 1].text == ".";

    if (tok.kind == TokenKind::String) {
      refs.string_literals.insert(strip_literal_quotes(x));
      continue;
    }
    if (is_ident(tok) && x.rfind("assert", 0) == 0 && x != "assert") refs.uses_assertions = true;

    if (x == "new") {
      std::size_t j = i + 1;
      while (j < t.size() && is_ident(t[j])) {
        add_type(t[j]);
        if (j + 2 < t.size() && t[j + 1].text == "." && is_ident(t[j + 2])) {
          j += 2;
        } else {
          ++j;
          break;
        }
      }
      if (auto end = skip_type_arguments(t, j); end != std::string::npos) add_type_args(j, end);
      continue;
    }
    if (x == "@" && i + 1 < t.size() && is_ident(t[i + 1]) && t[i + 1].text != "interface") {
      add_type(t[i + 1]);
      if (t[i + 1].text == "Test") refs.uses_test_annotation = true;
      continue;
    }
    if (x == "catch" && i + 1 < t.size() && t[i + 1].text == "(") {
      std::size_t close = i + 2;
      while (close < t.size() && t[close].text != ")") ++close;
      // The last identifier before `)` is the parameter name.
      for (std::size_t k = i + 2; k + 1 < close; ++k) {
        if (is_type_name(t[k]) && (t[k + 1].text == "|" || is_ident(t[k + 1]))) {
          refs.type_names.insert(t[k].text);
          refs.exception_names.insert(t[k].text);
        }
      }
      continue;
    }
    if (x == "throws") {
      for (std::size_t k = i + 1; k < t.size() && t[k].text != "{" && t[k].text != ";"; ++k) {
        if (is_type_name(t[k]) && !(k > 0 && t[k - 1].text == ".")) {
          refs.type_names.insert(t[k].text);
          refs.exception_names.insert(t[k].text);
        }
      }
      continue;
    }
    if (!is_type_name(tok) || after_dot) continue;

    const std::string next = i + 1 < t.size() ? t[i + 1].text : std::string();
    // Static receiver, class literal, method reference.
    if (next == "." || next == "::") {
      refs.type_names.insert(x);
      continue;
    }
    if (i > 0 && t[i - 1].text == "instanceof") {
      refs.type_names.insert(x);
      continue;
    }
    // Declaration: Type[<args>][[]...] name
    std::size_t j = i + 1;
    std::size_t args_end = skip_type_arguments(t, j);
    const bool generic = args_end != std::string::npos;
    if (generic) j = args_end;
    j = skip_array_dims(t, j);
    if (j < t.size() && is_plain_ident(t[j])) {
      refs.type_names.insert(x);
      if (generic) add_type_args(i + 1, args_end);
      continue;
    }
    // Generic type used in a cast or as a type argument elsewhere.
    if (generic && j < t.size() && (t[j].text == ")" || t[j].text == "(" || t[j].text == "::")) {
      refs.type_names.insert(x);
      add_type_args(i + 1, args_end);
      continue;
    }
    // Plain cast: (Type) expr
    if (i > 0 && t[i - 1].text == "(" && next == ")" && i + 2 < t.size() &&
        (is_ident(t[i + 2]) || t[i + 2].kind == TokenKind::Number || t[i + 2].kind == TokenKind::String ||
         t[i + 2].text == "(")) {
      refs.type_names.insert(x);
    }
  }
  for (const auto& name : refs.type_names)
    if (is_exception_like(name)) refs.exception_names.insert(name);
  return refs;
}

namespace {

std::string dotted_name(const std::vector<Token>& t, std::size_t& j) {
  std::string out;
  while (j < t.size() && t[j].text != ";") {
    if (is_ident(t[j]) || t[j].text == "." || t[j].text == "*") out += t[j].text;
    else break;
    ++j;
  }
  return out;
}

std::size_t matching_brace(const std::vector<Token>& t, std::size_t open) {
  long depth = 0;
  for (std::size_t j = open; j < t.size(); ++j) {
    if (t[j].text == "{") ++depth;
    else if (t[j].text == "}" && --depth == 0) return j;
  }
  return std::string::npos;
}

std::size_t matching_paren(const std::vector<Token>& t, std::size_t open) {
  long depth = 0;
  for (std::size_t j = open; j < t.size(); ++j) {
    if (t[j].text == "(") ++depth;
    else if (t[j].text == ")" && --depth == 0) return j;
  }
  return std::string::npos;
}

bool is_type_decl_keyword(const std::vector<Token>& t, std::size_t i) {
  const auto& x = t[i].text;
  if (x == "class" || x == "interface" || x == "enum") return !(i > 0 && t[i - 1].text == ".");
  return x == "record" && i + 2 < t.size() && is_ident(t[i + 1]) && (t[i + 2].text == "(" || t[i + 2].text == "<");
}

struct TopLevelType {
  std::string keyword;
  std::string name;
  bool is_public = false;
  std::size_t decl_token = 0;  // index of the declaration keyword
  std::size_t open = 0;        // body `{`
  std::size_t close = 0;       // body `}`
};

struct FileOutline {
  std::string package_name;
  std::vector<std::string> imports;  // source text of each import declaration
  std::vector<TopLevelType> types;
};

FileOutline outline(std::string_view source, const std::vector<Token>& t) {
  FileOutline out;
  bool saw_public = false;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const auto& x = t[i].text;
    if (x == "package") {
      std::size_t j = i + 1;
      out.package_name = dotted_name(t, j);
      i = j;
      continue;
    }
    if (x == "import") {
      std::size_t j = i + 1;
      while (j < t.size() && t[j].text != ";") ++j;
      if (j == t.size()) break;
      out.imports.emplace_back(source.substr(t[i].offset, t[j].offset + 1 - t[i].offset));
      i = j;
      continue;
    }
    if (x == "public") {
      saw_public = true;
      continue;
    }
    if (x == ";") {
      saw_public = false;
      continue;
    }
    if (is_type_decl_keyword(t, i) && i + 1 < t.size() && is_ident(t[i + 1])) {
      TopLevelType ty;
      ty.keyword = x;
      ty.name = t[i + 1].text;
      ty.is_public = saw_public;
      ty.decl_token = i;
      std::size_t j = i + 2;
      while (j < t.size() && t[j].text != "{") {
        if (t[j].text == "(") {
          j = matching_paren(t, j);
          if (j == std::string::npos) return out;
        }
        ++j;
      }
      if (j >= t.size()) return out;
      ty.open = j;
      ty.close = matching_brace(t, j);
      if (ty.close == std::string::npos) return out;
      out.types.push_back(ty);
      i = ty.close;
      saw_public = false;
      continue;
    }
    if (x == "{") {
      // Stray block at top level; skip it whole.
      const auto close = matching_brace(t, i);
      if (close == std::string::npos) return out;
      i = close;
      saw_public = false;
    }
  }
  return out;
}

std::set<std::string> member_method_names(const std::vector<Token>& t, std::size_t open, std::size_t close) {
  std::set<std::string> names;
  long depth = 0;
  for (std::size_t i = open; i < close; ++i) {
    const auto& x = t[i].text;
    if (x == "{") ++depth;
    else if (x == "}") --depth;
    if (depth != 1 || i == 0 || i + 1 >= close) continue;
    if (!is_plain_ident(t[i]) || t[i + 1].text != "(") continue;
    const auto& prev = t[i - 1];
    const bool typed = (is_plain_ident(prev) || prev.text == "void" || prev.text == ">" || prev.text == ">>" ||
                        prev.text == ">>>" || prev.text == "]" || is_java_keyword(prev.text));
    const bool primitive = prev.text == "int" || prev.text == "long" || prev.text == "boolean" ||
                           prev.text == "double" || prev.text == "float" || prev.text == "char" ||
                           prev.text == "byte" || prev.text == "short" || prev.text == "void";
    if (!typed) continue;
    if (is_java_keyword(prev.text) && !primitive) continue;
    names.insert(t[i].text);
  }
  return names;
}

}  // namespace

std::vector<TestClassInfo> parse_test_classes(std::string_view source, const fs::path& file_path) {
  const auto t = lex_tokens(source);
  if (!braces_balanced(t)) return {};
  const auto ol = outline(source, t);
  std::vector<TestClassInfo> out;
  for (const auto& ty : ol.types) {
    if (ty.keyword != "class") continue;
    TestClassInfo info;
    info.file_path = file_path;
    info.package_name = ol.package_name;
    info.class_name = ty.name;
    info.imports = ol.imports;
    info.insertion_offset = t[ty.close].offset;
    for (std::size_t k = ty.decl_token; k <= ty.close; ++k) info.token_set.insert(t[k].text);
    bool in_extends = false;
    for (std::size_t k = ty.decl_token + 2; k < ty.open; ++k) {
      if (t[k].text == "extends") in_extends = true;
      else if (t[k].text == "implements") in_extends = false;
      else if (in_extends && is_ident(t[k]) && t[k].text.size() >= 8 &&
               t[k].text.compare(t[k].text.size() - 8, 8, "TestCase") == 0)
        info.extends_testcase = true;
    }
    info.method_names = member_method_names(t, ty.open, ty.close + 1);
    out.push_back(std::move(info));
  }
  return out;
}

bool glob_match(std::string_view pattern, std::string_view path) {
  std::string re;
  for (std::size_t i = 0; i < pattern.size(); ++i) {
    const char c = pattern[i];
    if (c == '*') {
      if (i + 1 < pattern.size() && pattern[i + 1] == '*') {
        if (i + 2 < pattern.size() && pattern[i + 2] == '/') {
          re += "(?:.*/)?";
          i += 2;
        } else {
          re += ".*";
          ++i;
        }
      } else {
        re += "[^/]*";
      }
    } else if (c == '?') {
      re += "[^/]";
    } else if (std::string_view(".^$|()[]{}+\\").find(c) != std::string_view::npos) {
      re += '\\';
      re += c;
    } else {
      re += c;
    }
  }
  return std::regex_match(path.begin(), path.end(), std::regex(re));
}

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::vector<fs::path> find_files(const fs::path& root, const std::vector<std::string>& globs) {
  std::vector<fs::path> out;
  if (!fs::is_directory(root)) return out;
  for (auto it = fs::recursive_directory_iterator(root, fs::directory_options::skip_permission_denied);
       it != fs::recursive_directory_iterator(); ++it) {
    if (!it->is_regular_file()) continue;
    const auto rel = fs::relative(it->path(), root).generic_string();
    for (const auto& g : globs) {
      if (glob_match(g, rel)) {
        out.emplace_back(rel);
        break;
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<TestClassInfo> index_test_classes(const fs::path& project_root,
                                              const std::vector<std::string>& globs) {
  const auto files = find_files(project_root, globs);
  if (files.empty())
    throw Error(ErrorKind::NoTestSources, "no test sources under " + project_root.string());
  std::vector<TestClassInfo> out;
  for (const auto& rel : files) {
    const auto source = read_file(project_root / rel);
    if (!braces_balanced(source)) {
      spdlog::warn("skipping {}: unbalanced braces", rel.string());
      continue;
    }
    for (auto& info : parse_test_classes(source, rel)) out.push_back(std::move(info));
  }
  return out;
}

std::vector<MethodSpan> find_methods(std::string_view source) {
  const auto t = lex_tokens(source);
  std::vector<MethodSpan> out;
  for (std::size_t i = 1; i + 1 < t.size(); ++i) {
    if (!is_plain_ident(t[i]) || t[i + 1].text != "(") continue;
    const auto& prev = t[i - 1];
    const bool typed = is_ident(prev) || prev.text == ">" || prev.text == ">>" || prev.text == ">>>" ||
                       prev.text == "]";
    if (!typed || prev.text == "new" || prev.text == "return" || prev.text == "throw" || prev.text == "else")
      continue;
    const auto close_paren = matching_paren(t, i + 1);
    if (close_paren == std::string::npos) continue;
    std::size_t j = close_paren + 1;
    if (j < t.size() && t[j].text == "throws") {
      while (j < t.size() && t[j].text != "{" && t[j].text != ";") ++j;
    }
    if (j >= t.size() || t[j].text != "{") continue;
    const auto close = matching_brace(t, j);
    if (close == std::string::npos) continue;

    // Walk back over return type, modifiers and annotations.
    std::size_t b = i - 1;
    while (b > 0) {
      const auto& p = t[b - 1];
      if (p.text == ")") {
        // Annotation arguments: @Foo(...)
        long depth = 0;
        std::size_t k = b - 1;
        for (;; --k) {
          if (t[k].text == ")") ++depth;
          else if (t[k].text == "(" && --depth == 0) break;
          if (k == 0) break;
        }
        if (k >= 2 && is_ident(t[k - 1]) && t[k - 2].text == "@") {
          b = k - 2;
          continue;
        }
        break;
      }
      const bool part = is_ident(p) || p.text == "." || p.text == "<" || p.text == ">" || p.text == ">>" ||
                        p.text == ">>>" || p.text == "," || p.text == "?" || p.text == "[" || p.text == "]" ||
                        p.text == "@" || p.text == "&";
      if (!part) break;
      --b;
    }
    out.push_back(MethodSpan{t[i].text, t[b].offset, t[close].offset + 1});
    i = close;
  }
  return out;
}

std::optional<std::string> test_method_name(std::string_view method_text) {
  const auto t = lex_tokens(method_text);
  for (std::size_t i = 0; i + 2 < t.size(); ++i) {
    if (t[i].text == "void" && is_ident(t[i + 1]) && t[i + 1].text.rfind("test", 0) == 0 && t[i + 2].text == "(")
      return t[i + 1].text;
  }
  return std::nullopt;
}

std::string canonical_import(std::string_view import_text) {
  const auto t = lex_tokens(import_text);
  std::string out = "import ";
  std::size_t j = 0;
  if (j < t.size() && t[j].text == "import") ++j;
  if (j < t.size() && t[j].text == "static") {
    out += "static ";
    ++j;
  }
  out += dotted_name(t, j);
  out += ";";
  return out;
}

SourceIndex SourceIndex::build(const fs::path& project_root, const std::vector<std::string>& globs) {
  SourceIndex idx;
  for (const auto& rel : find_files(project_root, globs)) idx.add_source(read_file(project_root / rel));
  return idx;
}

void SourceIndex::add_source(std::string_view source) {
  const auto t = lex_tokens(source);
  const auto ol = outline(source, t);
  for (const auto& imp : ol.imports) ++import_counts[canonical_import(imp)];
  for (const auto& ty : ol.types) types[ty.name].push_back(TypeDecl{ol.package_name, ty.is_public});
}

}  // namespace brt
