#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "brt/code_model.hpp"
#include "brt/llm_gateway.hpp"

namespace brt {

struct ClassMatch {
  TestClassInfo class_info;
  double score = 0.0;
  std::size_t overlap = 0;  // |T_t ∩ T_c|
};

/// |T_t ∩ T_c| / |T_t|, 0 for an empty test token set.
double match_score(const TokenSet& test_tokens, const TokenSet& class_tokens);

/// Best class by match_score; ties go to the larger overlap, then the
/// lexicographically smaller file path. Throws Error(NoCandidateClasses).
ClassMatch find_best_matching_class(const CandidateTest& test, const std::vector<TestClassInfo>& classes);
ClassMatch find_best_matching_class(std::string_view method_text, const std::vector<TestClassInfo>& classes);

enum class TestFramework { AnnotationStyle, InheritanceStyle };

std::string_view to_string(TestFramework f);
TestFramework framework_from_string(std::string_view s);

struct ImportRules {
  std::set<std::string> default_namespace_types = default_java_lang_types();
  std::string assertion_import = "import static org.junit.Assert.*;";
  std::string test_annotation_import = "import org.junit.Test;";

  static std::set<std::string> default_java_lang_types();
};

void to_json(nlohmann::json& j, const ImportRules& r);
void from_json(const nlohmann::json& j, ImportRules& r);

struct ResolvedImports {
  std::vector<std::string> imports;     // declarations to add, in order
  std::vector<std::string> unresolved;  // type names nothing could be found for
};

ResolvedImports resolve_dependencies(const DependencyRefs& refs, const TestClassInfo& target,
                                     const SourceIndex& index, const ImportRules& rules = {});
ResolvedImports resolve_dependencies(const DependencyRefs& refs, const TestClassInfo& target,
                                     const std::filesystem::path& project_root, const ImportRules& rules = {});

struct InjectOptions {
  TestFramework framework = TestFramework::InheritanceStyle;
  std::string test_annotation = "@Test";
  std::string test_annotation_import = "import org.junit.Test;";
  std::string indent = "    ";
};

struct InjectionPlan {
  enum class Status { Planned, Failed };

  std::string bug_id;
  int sample_index = 0;
  ClassMatch target;
  std::string final_method_name;
  std::vector<std::string> added_imports;
  std::vector<std::string> unresolved;
  std::string modified_file_content;
  std::string patch;  // unified diff against the original file
  Status status = Status::Planned;
  std::string failure_reason;

  bool planned() const { return status == Status::Planned; }
};

/// JSON form omits the token set and the modified content (the patch carries it).
void to_json(nlohmann::json& j, const InjectionPlan& p);
void from_json(const nlohmann::json& j, InjectionPlan& p);

/// Inserts the method before the class's closing brace and the imports after
/// the last import (or the package line). Renames on collision to
/// `<name>_brt<k>`. The plan fails (status Failed) when the result does not
/// brace-balance.
InjectionPlan inject(const CandidateTest& test, const ClassMatch& match, const std::vector<std::string>& imports,
                     std::string_view original_source, const InjectOptions& options = {});

/// Reads the target file from `project_root / match.class_info.file_path`.
InjectionPlan inject_into_project(const CandidateTest& test, const ClassMatch& match,
                                const std::vector<std::string>& imports, const std::filesystem::path& project_root,
                                const InjectOptions& options = {});

}  // namespace brt
