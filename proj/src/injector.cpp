#include "brt/injector.hpp"

#include <algorithm>

#include "brt/error.hpp"
#include "brt/report_store.hpp"
#include "brt/unified_diff.hpp"

namespace brt {

using nlohmann::json;

double match_score(const TokenSet& test_tokens, const TokenSet& class_tokens) {
  if (test_tokens.empty()) return 0.0;
  std::size_t common = 0;
  for (const auto& t : test_tokens) common += class_tokens.count(t);
  return static_cast<double>(common) / static_cast<double>(test_tokens.size());
}

ClassMatch find_best_matching_class(std::string_view method_text, const std::vector<TestClassInfo>& classes) {
  if (classes.empty()) throw Error(ErrorKind::NoCandidateClasses, "no test classes to match against");
  const TokenSet tt = token_set(method_text);
  std::optional<ClassMatch> best;
  for (const auto& c : classes) {
    std::size_t common = 0;
    for (const auto& t : tt) common += c.token_set.count(t);
    const double score = tt.empty() ? 0.0 : static_cast<double>(common) / static_cast<double>(tt.size());
    if (!best) {
      best = ClassMatch{c, score, common};
      continue;
    }
    // Same denominator, so comparing overlaps compares scores exactly.
    bool better = common > best->overlap;
    if (common == best->overlap) better = c.file_path.generic_string() < best->class_info.file_path.generic_string();
    if (better) best = ClassMatch{c, score, common};
  }
  return *best;
}

ClassMatch find_best_matching_class(const CandidateTest& test, const std::vector<TestClassInfo>& classes) {
  return find_best_matching_class(test.method_text, classes);
}

std::string_view to_string(TestFramework f) {
  return f == TestFramework::AnnotationStyle ? "annotation-style" : "inheritance-style";
}

TestFramework framework_from_string(std::string_view s) {
  if (s == "annotation-style") return TestFramework::AnnotationStyle;
  if (s == "inheritance-style") return TestFramework::InheritanceStyle;
  throw Error(ErrorKind::ConfigError, "unknown framework '" + std::string(s) + "'");
}

std::set<std::string> ImportRules::default_java_lang_types() {
  return {"AbstractMethodError", "Appendable", "ArithmeticException", "ArrayIndexOutOfBoundsException",
          "ArrayStoreException", "AssertionError", "AutoCloseable", "Boolean", "Byte", "CharSequence",
          "Character", "Class", "ClassCastException", "ClassLoader", "ClassNotFoundException",
          "CloneNotSupportedException", "Cloneable", "Comparable", "Deprecated", "Double", "Enum", "Error",
          "Exception", "ExceptionInInitializerError", "Float", "FunctionalInterface", "IllegalAccessException",
          "IllegalArgumentException", "IllegalMonitorStateException", "IllegalStateException",
          "IndexOutOfBoundsException", "InstantiationException", "Integer", "InternalError",
          "InterruptedException", "Iterable", "LinkageError", "Long", "Math", "NegativeArraySizeException",
          "NoClassDefFoundError", "NoSuchFieldException", "NoSuchMethodException", "NullPointerException",
          "Number", "NumberFormatException", "Object", "OutOfMemoryError", "Override", "Process", "Record",
          "ReflectiveOperationException", "Runnable", "Runtime", "RuntimeException", "SafeVarargs",
          "SecurityException", "Short", "StackOverflowError", "StrictMath", "String", "StringBuffer",
          "StringBuilder", "StringIndexOutOfBoundsException", "SuppressWarnings", "System", "Thread",
          "ThreadLocal", "Throwable", "UnsupportedOperationException", "VirtualMachineError", "Void"};
}

void to_json(json& j, const ImportRules& r) {
  j = json{{"default_namespace_types", r.default_namespace_types},
           {"assertion_import", r.assertion_import},
           {"test_annotation_import", r.test_annotation_import}};
}

void from_json(const json& j, ImportRules& r) {
  r = ImportRules{};
  if (j.contains("default_namespace_types"))
    r.default_namespace_types = j.at("default_namespace_types").get<std::set<std::string>>();
  if (j.contains("assertion_import")) r.assertion_import = j.at("assertion_import").get<std::string>();
  if (j.contains("test_annotation_import"))
    r.test_annotation_import = j.at("test_annotation_import").get<std::string>();
}

namespace {

struct ImportView {
  bool is_static = false;
  std::string path;  // "a.b.C" or "a.b.*"
};

ImportView view(std::string_view decl) {
  std::string c = canonical_import(decl);  // "import [static ]x;"
  ImportView v;
  std::string_view s = c;
  s.remove_prefix(std::string_view("import ").size());
  if (s.rfind("static ", 0) == 0) {
    v.is_static = true;
    s.remove_prefix(std::string_view("static ").size());
  }
  if (!s.empty() && s.back() == ';') s.remove_suffix(1);
  v.path = std::string(s);
  return v;
}

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

bool covered(const std::string& name, const TestClassInfo& target, const SourceIndex& index,
             const ImportRules& rules, const std::vector<std::string>& added) {
  if (name == target.class_name || rules.default_namespace_types.count(name)) return true;
  const auto decls = index.types.find(name);
  auto declared_in = [&](std::string_view pkg) {
    if (decls == index.types.end()) return false;
    return std::any_of(decls->second.begin(), decls->second.end(),
                       [&](const SourceIndex::TypeDecl& d) { return d.package_name == pkg; });
  };
  if (declared_in(target.package_name)) return true;
  auto check = [&](const std::string& decl) {
    const auto v = view(decl);
    if (v.path == name || ends_with(v.path, "." + name)) return true;
    if (!v.is_static && ends_with(v.path, ".*")) {
      const auto pkg = v.path.substr(0, v.path.size() - 2);
      if (declared_in(pkg)) return true;
    }
    return false;
  };
  return std::any_of(target.imports.begin(), target.imports.end(), check) ||
         std::any_of(added.begin(), added.end(), check);
}

std::optional<std::string> most_common_import(const std::string& name, const SourceIndex& index) {
  std::optional<std::string> best_plain, best_static;
  int plain_votes = 0, static_votes = 0;
  for (const auto& [decl, count] : index.import_counts) {
    const auto v = view(decl);
    if (!ends_with(v.path, "." + name)) continue;
    // import_counts is ordered, so the first of equal counts is the smallest.
    if (v.is_static) {
      if (count > static_votes) {
        static_votes = count;
        best_static = decl;
      }
    } else if (count > plain_votes) {
      plain_votes = count;
      best_plain = decl;
    }
  }
  return best_plain ? best_plain : best_static;
}

bool has_static_assertion_import(const std::vector<std::string>& imports) {
  return std::any_of(imports.begin(), imports.end(), [](const std::string& decl) {
    const auto v = view(decl);
    return v.is_static && (v.path.find("Assert") != std::string::npos || v.path.find(".assert") != std::string::npos);
  });
}

bool has_import(const std::vector<std::string>& imports, const std::string& decl) {
  const auto want = canonical_import(decl);
  return std::any_of(imports.begin(), imports.end(),
                     [&](const std::string& d) { return canonical_import(d) == want; });
}

bool imports_test_annotation(const std::vector<std::string>& imports) {
  return std::any_of(imports.begin(), imports.end(), [](const std::string& decl) {
    const auto v = view(decl);
    return !v.is_static && (ends_with(v.path, ".Test") || v.path == "org.junit.*" ||
                            v.path == "org.junit.jupiter.api.*" || v.path == "org.testng.annotations.*");
  });
}

}  // namespace

ResolvedImports resolve_dependencies(const DependencyRefs& refs, const TestClassInfo& target,
                                     const SourceIndex& index, const ImportRules& rules) {
  ResolvedImports out;
  auto add = [&](const std::string& decl) {
    const auto c = canonical_import(decl);
    if (!has_import(out.imports, c) && !has_import(target.imports, c)) out.imports.push_back(c);
  };
  for (const auto& name : refs.type_names) {
    if (name == "Test" && refs.uses_test_annotation) continue;  // handled by the annotation rule
    if (covered(name, target, index, rules, out.imports)) continue;

    const auto decls = index.types.find(name);
    std::optional<std::string> pkg;
    if (decls != index.types.end()) {
      int publics = 0;
      for (const auto& d : decls->second) {
        if (!d.is_public) continue;
        ++publics;
        pkg = d.package_name;
      }
      if (publics != 1) pkg.reset();
    }
    if (pkg) {
      if (!pkg->empty()) add("import " + *pkg + "." + name + ";");
      continue;
    }
    if (auto common = most_common_import(name, index)) {
      add(*common);
      continue;
    }
    out.unresolved.push_back(name);
  }
  if (refs.uses_assertions && !target.extends_testcase && !has_static_assertion_import(target.imports) &&
      !has_static_assertion_import(out.imports) && !rules.assertion_import.empty())
    add(rules.assertion_import);
  if (refs.uses_test_annotation && !imports_test_annotation(target.imports) &&
      !imports_test_annotation(out.imports) && !rules.test_annotation_import.empty())
    add(rules.test_annotation_import);
  return out;
}

ResolvedImports resolve_dependencies(const DependencyRefs& refs, const TestClassInfo& target,
                                     const std::filesystem::path& project_root, const ImportRules& rules) {
  return resolve_dependencies(refs, target, SourceIndex::build(project_root), rules);
}

void to_json(json& j, const InjectionPlan& p) {
  j = json{{"bug_id", p.bug_id},
           {"sample_index", p.sample_index},
           {"test_file", p.target.class_info.file_path.generic_string()},
           {"class_name", p.target.class_info.class_name},
           {"package_name", p.target.class_info.package_name},
           {"class_fqn", p.target.class_info.qualified_name()},
           {"score", p.target.score},
           {"overlap", p.target.overlap},
           {"final_method_name", p.final_method_name},
           {"added_imports", p.added_imports},
           {"unresolved", p.unresolved},
           {"status", p.planned() ? "planned" : "failed"}};
  if (!p.planned()) j["failure_reason"] = p.failure_reason;
}

void from_json(const json& j, InjectionPlan& p) {
  p = InjectionPlan{};
  p.bug_id = j.at("bug_id").get<std::string>();
  p.sample_index = j.at("sample_index").get<int>();
  p.target.class_info.file_path = j.value("test_file", std::string{});
  p.target.class_info.class_name = j.value("class_name", std::string{});
  p.target.class_info.package_name = j.value("package_name", std::string{});
  p.target.score = j.value("score", 0.0);
  p.target.overlap = j.value("overlap", std::size_t{0});
  p.final_method_name = j.value("final_method_name", std::string{});
  p.added_imports = j.value("added_imports", std::vector<std::string>{});
  p.unresolved = j.value("unresolved", std::vector<std::string>{});
  p.status = j.value("status", std::string("planned")) == "planned" ? InjectionPlan::Status::Planned
                                                                      : InjectionPlan::Status::Failed;
  p.failure_reason = j.value("failure_reason", std::string{});
}

namespace {

InjectionPlan failed(InjectionPlan plan, std::string reason) {
  plan.status = InjectionPlan::Status::Failed;
  plan.failure_reason = std::move(reason);
  plan.modified_file_content.clear();
  plan.patch.clear();
  return plan;
}

// Name token of the method declaration: first identifier followed by "(".
std::optional<Token> declared_name(const std::vector<Token>& toks) {
  for (std::size_t i = 0; i + 1 < toks.size(); ++i) {
    if (toks[i].text == "{") break;
    if (toks[i].kind == TokenKind::Identifier && toks[i + 1].text == "(" && !is_java_keyword(toks[i].text) &&
        (i == 0 || toks[i - 1].text != "@"))
      return toks[i];
  }
  return std::nullopt;
}

bool has_annotation(const std::vector<Token>& toks, std::string_view annotation, std::size_t before) {
  const auto name = annotation.substr(annotation.find_first_not_of('@'));
  for (std::size_t i = 0; i + 1 < toks.size() && toks[i].offset < before; ++i)
    if (toks[i].text == "@" && toks[i + 1].text == name) return true;
  return false;
}

std::string indent_lines(std::string_view text, std::string_view indent) {
  std::string out;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    const auto line = text.substr(start, nl - start);
    if (line.find_first_not_of(" \t\r") != std::string_view::npos) {
      out += indent;
      out += line;
    }
    out += '\n';
    start = nl + 1;
  }
  return out;
}

// Offset where new imports go, and whether a blank separator line is needed.
std::pair<std::size_t, bool> import_anchor(std::string_view source) {
  const auto toks = lex_tokens(source);
  std::optional<std::size_t> last_import_end, package_end;
  int depth = 0;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    const auto& x = toks[i].text;
    if (x == "{") ++depth;
    if (x == "}") --depth;
    if (depth != 0) continue;
    if (x == "import" || x == "package") {
      std::size_t k = i + 1;
      while (k < toks.size() && toks[k].text != ";") ++k;
      if (k >= toks.size()) break;
      (x == "import" ? last_import_end : package_end) = toks[k].offset + 1;
      i = k;
    } else if (x == "class" || x == "interface" || x == "enum" || x == "@") {
      break;
    }
  }
  auto line_after = [&](std::size_t off) {
    const auto nl = source.find('\n', off);
    return nl == std::string_view::npos ? source.size() : nl + 1;
  };
  if (last_import_end) return {line_after(*last_import_end), false};
  if (package_end) return {line_after(*package_end), true};
  return {0, false};
}

}  // namespace

InjectionPlan inject(const CandidateTest& test, const ClassMatch& match, const std::vector<std::string>& imports,
                     std::string_view original, const InjectOptions& options) {
  InjectionPlan plan;
  plan.bug_id = test.bug_id;
  plan.sample_index = test.sample_index;
  plan.target = match;

  const auto& cls = match.class_info;
  if (cls.insertion_offset >= original.size() || original[cls.insertion_offset] != '}')
    return failed(std::move(plan), "insertion offset does not point at the class closing brace");

  std::string method = test.method_text;
  auto toks = lex_tokens(method);
  const auto name_tok = declared_name(toks);
  if (!name_tok) return failed(std::move(plan), "candidate has no method declaration");

  std::string name = name_tok->text;
  if (cls.method_names.count(name)) {
    int k = 1;
    while (cls.method_names.count(name + "_brt" + std::to_string(k))) ++k;
    name += "_brt" + std::to_string(k);
    method.replace(name_tok->offset, name_tok->text.size(), name);
    toks = lex_tokens(method);
  }
  plan.final_method_name = name;

  std::vector<std::string> to_add;
  auto want = [&](const std::string& decl) {
    const auto c = canonical_import(decl);
    if (has_import(cls.imports, c) || has_import(to_add, c)) return;
    to_add.push_back(c);
  };
  for (const auto& decl : imports) want(decl);

  if (options.framework == TestFramework::AnnotationStyle &&
      !has_annotation(toks, options.test_annotation, name_tok->offset)) {
    method = options.test_annotation + "\n" + method;
    if (!imports_test_annotation(cls.imports) && !imports_test_annotation(to_add) &&
        !options.test_annotation_import.empty())
      want(options.test_annotation_import);
  }

  std::string modified(original);

  // Method first: it sits after the imports, so import insertion does not shift it.
  std::string block = indent_lines(method, options.indent);
  std::size_t line_start = cls.insertion_offset;
  while (line_start > 0 && original[line_start - 1] != '\n') --line_start;
  const bool brace_alone =
      original.substr(line_start, cls.insertion_offset - line_start).find_first_not_of(" \t") == std::string_view::npos;
  if (brace_alone) {
    modified.insert(line_start, "\n" + block);
  } else {
    modified.insert(cls.insertion_offset, "\n\n" + block);
  }

  if (!to_add.empty()) {
    const auto [at, blank] = import_anchor(original);
    std::string text = blank ? "\n" : "";
    if (at > 0 && original[at - 1] != '\n') text = "\n" + text;
    for (const auto& decl : to_add) text += decl + "\n";
    if (at == 0) text += "\n";
    modified.insert(at, text);
  }
  plan.added_imports = to_add;

  if (!braces_balanced(modified)) return failed(std::move(plan), "UnbalancedResult");
  const auto reparsed = parse_test_classes(modified, cls.file_path);
  const bool class_intact = std::any_of(reparsed.begin(), reparsed.end(), [&](const TestClassInfo& c) {
    return c.class_name == cls.class_name && c.method_names.count(name);
  });
  if (!class_intact) return failed(std::move(plan), "UnbalancedResult");

  plan.patch = make_unified_diff(original, modified, cls.file_path.generic_string());
  plan.modified_file_content = std::move(modified);
  return plan;
}

InjectionPlan inject_into_project(const CandidateTest& test, const ClassMatch& match,
                                const std::vector<std::string>& imports, const std::filesystem::path& project_root, const InjectOptions& options) {
  const auto source = read_text_file(project_root / match.class_info.file_path);
  return inject(test, match, imports, std::string_view(source), options);
}

}  // namespace brt
