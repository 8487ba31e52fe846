#include <algorithm>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "brt/code_model.hpp"
#include "brt/error.hpp"
#include "brt/report_store.hpp"
#include "test_support.hpp"

using namespace brt;
using brt::testing::TempDir;
namespace fs = std::filesystem;

namespace {

const char* kNanEqualsTest =
    "public void testEquals() {\n"
    "    assertFalse(MathUtils.equals(Double.NaN, Double.NaN));\n"
    "    assertFalse(MathUtils.equals(Float.NaN, Float.NaN));\n"
    "}";

std::string join(const std::vector<std::string>& toks) {
  std::string out;
  for (const auto& t : toks) {
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

std::string random_source(std::mt19937_64& rng) {
  static const std::vector<std::string> pieces = {
      "a", "Foo", "x1", "_y", "$z", "0", "42", "3.14", "1e-5", "0x1F", "1L", " ", "  ", "\n", "\t", "(", ")",
      "{", "}", "[", "]", ";", ",", ".", "@", "=", "==", "<", ">", ">>>=", "->", "::", "+", "-", "*", "/",
      "//", "/*", "*/", "\"", "'", "\\", "\"\"\"", "'a'", "\"s\"", "#", "`", "\xc3\xa9", "\x01", "\r\n"};
  std::uniform_int_distribution<std::size_t> len(0, 40), pick(0, pieces.size() - 1);
  std::string s;
  for (std::size_t i = 0, n = len(rng); i < n; ++i) s += pieces[pick(rng)];
  return s;
}

std::string mathlite_root() {
  return (brt::testing::fixtures_dir() / "projects" / "mathlite" / "buggy").string();
}

}  // namespace

TEST(Lex, HandLexedStatement) {
  EXPECT_EQ(lex("assertFalse(MathUtils.equals(a, b));"),
            (std::vector<std::string>{"assertFalse", "(", "MathUtils", ".", "equals", "(", "a", ",", "b", ")", ")",
                                      ";"}));
}

TEST(Lex, Empty) { EXPECT_TRUE(lex("").empty()); }

TEST(Lex, CommentsDropped) {
  EXPECT_EQ(lex("// c\nx"), std::vector<std::string>{"x"});
  EXPECT_EQ(lex("a /* b\n c */ d"), (std::vector<std::string>{"a", "d"}));
  EXPECT_EQ(lex("a /* unterminated"), std::vector<std::string>{"a"});
}

TEST(Lex, LiteralsAreSingleTokens) {
  EXPECT_EQ(lex("f(\"a b // c\", 'x', '\\'')"),
            (std::vector<std::string>{"f", "(", "\"a b // c\"", ",", "'x'", ",", "'\\''", ")"}));
  EXPECT_EQ(lex("s = \"\"\"\n  text { block\n  \"\"\";"),
            (std::vector<std::string>{"s", "=", "\"\"\"\n  text { block\n  \"\"\"", ";"}));
  EXPECT_EQ(lex("\"esc \\\" quote\""), std::vector<std::string>{"\"esc \\\" quote\""});
}

TEST(Lex, OperatorsAndNumbers) {
  EXPECT_EQ(lex("x >>>= 1e-5 + 0x1Fp+2 -> y::z"),
            (std::vector<std::string>{"x", ">>>=", "1e-5", "+", "0x1Fp+2", "->", "y", "::", "z"}));
}

TEST(Lex, UnknownBytesAreSingleTokens) {
  EXPECT_EQ(lex("a # b"), (std::vector<std::string>{"a", "#", "b"}));
}

TEST(Lex, OffsetsPointAtTokens) {
  const std::string src = "int  x = /* c */ 3;";
  for (const auto& t : lex_tokens(src)) EXPECT_EQ(src.substr(t.offset, t.text.size()), t.text);
}

TEST(Lex, FuzzedTotalityAndRelex) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 2000; ++i) {
    const auto s = random_source(rng);
    const auto toks = lex(s);
    EXPECT_EQ(lex(join(toks)), toks) << "input: " << s;
  }
}

TEST(TokenSet, Dedup) { EXPECT_EQ(token_set("x x y"), (TokenSet{"x", "y"})); }

TEST(TokenSet, NanTestContents) {
  const auto ts = token_set(kNanEqualsTest);
  for (const char* t : {"MathUtils", "equals", "assertFalse", "Double", "Float", "NaN"}) EXPECT_TRUE(ts.count(t)) << t;
}

TEST(TokenSet, SubsetOfLex) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 200; ++i) {
    const auto s = random_source(rng);
    const auto all = lex(s);
    for (const auto& t : token_set(s)) EXPECT_NE(std::find(all.begin(), all.end(), t), all.end());
  }
}

TEST(Dependencies, NanTest) {
  const auto refs = extract_dependencies(kNanEqualsTest);
  for (const char* t : {"MathUtils", "Double", "Float"}) EXPECT_TRUE(refs.type_names.count(t)) << t;
  EXPECT_TRUE(refs.uses_assertions);
  EXPECT_FALSE(refs.uses_test_annotation);
}

TEST(Dependencies, EmptyMethod) { EXPECT_TRUE(extract_dependencies("public void test() {}").empty()); }

TEST(Dependencies, CatchClause) {
  const auto refs = extract_dependencies(
      "public void testRead() {\n    try {\n        read();\n    } catch (IOException e) {\n    }\n}");
  EXPECT_EQ(refs.exception_names, std::set<std::string>{"IOException"});
  EXPECT_TRUE(refs.type_names.count("IOException"));
}

TEST(Dependencies, RuleTable) {
  const auto refs = extract_dependencies(
      "@Test\npublic void testAll() throws ParseException {\n"
      "    List<String> xs = new ArrayList<>();\n"
      "    Map<Key, Value> m = Collections.emptyMap();\n"
      "    Class<?> c = Widget.class;\n"
      "    Locale l = new Locale(\"tr\", \"TR\");\n"
      "    try { x(); } catch (IllegalStateException | UnsupportedOperationException e) { }\n"
      "    @SuppressWarnings(\"x\") int y = 0;\n"
      "    assertEquals(\"abc\", s);\n"
      "}");
  for (const char* t : {"List", "String", "ArrayList", "Map", "Key", "Value", "Collections", "Class", "Widget",
                        "Locale", "IllegalStateException", "UnsupportedOperationException", "ParseException",
                        "SuppressWarnings"})
    EXPECT_TRUE(refs.type_names.count(t)) << t;
  EXPECT_TRUE(refs.type_names.count("Test"));
  EXPECT_TRUE(refs.uses_test_annotation);
  EXPECT_TRUE(refs.uses_assertions);
  EXPECT_EQ(refs.exception_names,
            (std::set<std::string>{"IllegalStateException", "ParseException", "UnsupportedOperationException"}));
  EXPECT_TRUE(refs.string_literals.count("tr"));
  EXPECT_TRUE(refs.string_literals.count("abc"));
}

TEST(Dependencies, SoundnessAndShape) {
  const std::string src =
      "public void testX() { Foo f = new Bar(Baz.QUX); int n = Zed.count(); assertTrue(n > 0); }";
  const auto refs = extract_dependencies(src);
  const auto toks = token_set(src);
  for (const auto& t : refs.type_names) {
    EXPECT_TRUE(is_capitalized_identifier(t)) << t;
    EXPECT_TRUE(toks.count(t)) << t;
  }
  EXPECT_FALSE(refs.type_names.count("QUX"));
}

TEST(Dependencies, Unbalanced) {
  try {
    extract_dependencies("public void testX() { if (a) {");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::UnbalancedBraces);
  }
}

TEST(Braces, IgnoresLiteralsAndComments) {
  EXPECT_TRUE(braces_balanced("{ \"}\" '{' /* } */ // }\n }"));
  EXPECT_FALSE(braces_balanced("} {"));
  EXPECT_FALSE(braces_balanced("{"));
  EXPECT_TRUE(braces_balanced(""));
}

TEST(Index, FixtureProject) {
  const auto classes = index_test_classes(mathlite_root(), {"src/test/java/**/*.java"});
  ASSERT_EQ(classes.size(), 3u);
  std::map<std::string, std::string> by_name;
  for (const auto& c : classes) by_name[c.class_name] = c.package_name;
  EXPECT_EQ(by_name.at("MathUtilsTest"), "org.mathlite");
  EXPECT_EQ(by_name.at("FractionTest"), "org.mathlite");
  EXPECT_EQ(by_name.at("MeanTest"), "org.mathlite.stat");
  for (const auto& c : classes) {
    EXPECT_TRUE(c.extends_testcase);
    EXPECT_TRUE(c.file_path.is_relative());
    const auto src = read_text_file(fs::path(mathlite_root()) / c.file_path);
    EXPECT_EQ(src[c.insertion_offset], '}');
    EXPECT_TRUE(braces_balanced(src.substr(0, c.insertion_offset) + "void m() {}" + src.substr(c.insertion_offset)));
  }
}

TEST(Index, NestedClassesGiveOneEntry) {
  const std::string src =
      "package p.q;\n\nimport java.util.List;\nimport static org.junit.Assert.*;\n\n"
      "public class OuterTest {\n    static class Inner {\n        void f() { }\n    }\n"
      "    interface Cb { void call(); }\n    @Test\n    public void testA() {\n        new Cb() {\n"
      "            public void call() { }\n        };\n    }\n}\n";
  const auto classes = parse_test_classes(src, "OuterTest.java");
  ASSERT_EQ(classes.size(), 1u);
  const auto& c = classes[0];
  EXPECT_EQ(c.class_name, "OuterTest");
  EXPECT_EQ(c.package_name, "p.q");
  EXPECT_EQ(c.qualified_name(), "p.q.OuterTest");
  EXPECT_EQ(c.insertion_offset, src.rfind('}'));
  EXPECT_EQ(c.imports, (std::vector<std::string>{"import java.util.List;", "import static org.junit.Assert.*;"}));
  EXPECT_FALSE(c.extends_testcase);
  EXPECT_TRUE(c.method_names.count("testA"));
  EXPECT_FALSE(c.method_names.count("f"));
}

TEST(Index, TwoTopLevelClasses) {
  const auto classes = parse_test_classes("class A { }\nclass B extends junit.framework.TestCase { }", "x.java");
  ASSERT_EQ(classes.size(), 2u);
  EXPECT_EQ(classes[0].class_name, "A");
  EXPECT_EQ(classes[1].class_name, "B");
  EXPECT_TRUE(classes[1].extends_testcase);
}

TEST(Index, UnbalancedFileSkipped) {
  TempDir dir;
  write_text_file(dir / "src/test/GoodTest.java", "public class GoodTest { }");
  write_text_file(dir / "src/test/BadTest.java", "public class BadTest { void f() { }");
  const auto classes = index_test_classes(dir.path(), {"**/*Test.java"});
  ASSERT_EQ(classes.size(), 1u);
  EXPECT_EQ(classes[0].class_name, "GoodTest");
}

TEST(Index, EmptyTestDir) {
  TempDir dir;
  fs::create_directories(dir / "src/test/java");
  try {
    index_test_classes(dir.path(), {"src/test/**/*.java"});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NoTestSources);
  }
}

TEST(Glob, Patterns) {
  EXPECT_TRUE(glob_match("**/*Test.java", "src/test/java/a/FooTest.java"));
  EXPECT_TRUE(glob_match("**/*Test.java", "FooTest.java"));
  EXPECT_TRUE(glob_match("src/test/**/*.java", "src/test/A.java"));
  EXPECT_FALSE(glob_match("src/test/**/*.java", "src/main/A.java"));
  EXPECT_FALSE(glob_match("*.java", "a/B.java"));
  EXPECT_TRUE(glob_match("src/?/X.java", "src/a/X.java"));
}

TEST(Methods, FindsDeclarations) {
  const std::string src =
      "class T {\n    @Test\n    public void testA() throws Exception {\n        if (x) { y(); }\n    }\n\n"
      "    private int helper(int a) { return a; }\n    public T() { }\n}\n";
  const auto methods = find_methods(src);
  ASSERT_EQ(methods.size(), 3u);
  EXPECT_EQ(methods[0].name, "testA");
  EXPECT_EQ(src.substr(methods[0].begin, 5), "@Test");
  EXPECT_EQ(src[methods[0].end - 1], '}');
  EXPECT_EQ(methods[1].name, "helper");
  EXPECT_EQ(src.substr(methods[1].begin, methods[1].end - methods[1].begin),
            "private int helper(int a) { return a; }");
  EXPECT_EQ(methods[2].name, "T");
}

TEST(Methods, TestMethodName) {
  EXPECT_EQ(*test_method_name(kNanEqualsTest), "testEquals");
  EXPECT_FALSE(test_method_name("int f() { return 1; }").has_value());
}

TEST(Imports, Canonical) {
  EXPECT_EQ(canonical_import("import   org . a.B ;"), "import org.a.B;");
  EXPECT_EQ(canonical_import("import static org.junit.Assert.*;"), "import static org.junit.Assert.*;");
}

TEST(SourceIndex, CountsAndDeclarations) {
  SourceIndex idx;
  idx.add_source("package a.b;\nimport x.Y;\npublic class Foo { }\nclass Helper { }");
  idx.add_source("package c;\nimport x.Y;\nimport static z.W.m;\npublic final class Bar { }");
  EXPECT_EQ(idx.import_counts.at("import x.Y;"), 2);
  EXPECT_EQ(idx.import_counts.at("import static z.W.m;"), 1);
  ASSERT_EQ(idx.types.at("Foo").size(), 1u);
  EXPECT_EQ(idx.types.at("Foo")[0].package_name, "a.b");
  EXPECT_TRUE(idx.types.at("Foo")[0].is_public);
  EXPECT_FALSE(idx.types.at("Helper")[0].is_public);
  EXPECT_TRUE(idx.types.at("Bar")[0].is_public);
}
