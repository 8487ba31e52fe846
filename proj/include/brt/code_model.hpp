#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace brt {

/// Fragment every prompt ends with and every candidate test starts with.
inline constexpr std::string_view kTestStem = "public void test";

enum class TokenKind { Identifier, Number, String, Char, Operator, Other };

struct Token {
  std::string text;
  std::size_t offset = 0;  // byte offset of the first character in the source
  TokenKind kind = TokenKind::Other;
};

/// Error-tolerant lexer for Java-like sources. Comments and whitespace are
/// dropped; string, text-block and char literals stay single tokens including
/// their quotes. An unterminated literal runs to the end of the input, which
/// keeps `lex(join(lex(s), " ")) == lex(s)` for every input.
std::vector<Token> lex_tokens(std::string_view source);

/// Token texts only.
std::vector<std::string> lex(std::string_view source);

using TokenSet = std::set<std::string>;

TokenSet token_set(std::string_view source);

bool is_java_keyword(std::string_view word);

/// Identifier shaped like a type name: `[A-Z][A-Za-z0-9_]*`.
bool is_capitalized_identifier(std::string_view word);

/// `{`/`}` balance over lexed tokens (braces inside literals and comments do
/// not count). Depth must never go negative.
bool braces_balanced(std::string_view source);
bool braces_balanced(const std::vector<Token>& tokens);

struct DependencyRefs {
  std::set<std::string> type_names;
  bool uses_assertions = false;
  bool uses_test_annotation = false;
  std::set<std::string> string_literals;  // quotes stripped
  std::set<std::string> exception_names;

  bool empty() const {
    return type_names.empty() && !uses_assertions && !uses_test_annotation &&
           string_literals.empty() && exception_names.empty();
  }
};

/// Collects capitalized names used as types in a generated test method.
/// Throws Error(UnbalancedBraces).
DependencyRefs extract_dependencies(std::string_view method_text);

/// Content of a string/text-block literal token without its quotes.
std::string strip_literal_quotes(std::string_view literal);

struct TestClassInfo {
  std::filesystem::path file_path;
  std::string package_name;
  std::string class_name;
  std::vector<std::string> imports;  // full `import ...;` declarations, as written
  TokenSet token_set;
  bool extends_testcase = false;
  std::size_t insertion_offset = 0;  // offset of the `}` closing the top-level class
  std::set<std::string> method_names;

  std::string qualified_name() const {
    return package_name.empty() ? class_name : package_name + "." + class_name;
  }
};

/// Top-level classes declared in one source text. Empty when braces are
/// unbalanced. `file_path` is copied into every entry.
std::vector<TestClassInfo> parse_test_classes(std::string_view source,
                                              const std::filesystem::path& file_path);

/// Scans `project_root` for files matching any glob (relative, `/`-separated,
/// `**` spans directories). Throws Error(NoTestSources) when nothing matches.
std::vector<TestClassInfo> index_test_classes(const std::filesystem::path& project_root,
                                              const std::vector<std::string>& test_source_globs);

bool glob_match(std::string_view pattern, std::string_view relative_path);

/// Files under root matching any of the globs, sorted, as paths relative to root.
std::vector<std::filesystem::path> find_files(const std::filesystem::path& root,
                                              const std::vector<std::string>& globs);

struct MethodSpan {
  std::string name;
  std::size_t begin = 0;  // first byte of the declaration (annotations/modifiers included)
  std::size_t end = 0;    // one past the closing brace
};

/// Method declarations (with a body) found anywhere in `source`, in order.
std::vector<MethodSpan> find_methods(std::string_view source);

/// Name of the first `void test*` style method declaration, if any.
std::optional<std::string> test_method_name(std::string_view method_text);

/// Normalizes an import declaration to `import [static ]a.b.C;`.
std::string canonical_import(std::string_view import_text);

/// Project-wide view used for import resolution: where top-level types are
/// declared and how often each import statement occurs.
struct SourceIndex {
  struct TypeDecl {
    std::string package_name;
    bool is_public = false;
  };
  std::map<std::string, std::vector<TypeDecl>> types;  // simple name -> declarations
  std::map<std::string, int> import_counts;             // canonical import -> occurrences

  static SourceIndex build(const std::filesystem::path& project_root,
                           const std::vector<std::string>& globs = {"**/*.java"});
  void add_source(std::string_view source);
};

}  // namespace brt
