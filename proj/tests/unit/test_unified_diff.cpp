#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "brt/error.hpp"
#include "brt/unified_diff.hpp"

using namespace brt;

namespace {

std::string random_lines(std::mt19937_64& rng, int max_lines) {
  static const std::vector<std::string> pool = {"a", "b", "c", "{", "}", "", "    x();", "import p.Q;"};
  std::uniform_int_distribution<int> n(0, max_lines), pick(0, static_cast<int>(pool.size()) - 1), coin(0, 1);
  std::string s;
  const int lines = n(rng);
  for (int i = 0; i < lines; ++i) s += pool[pick(rng)] + "\n";
  if (!s.empty() && coin(rng)) s.pop_back();
  return s;
}

std::string mutate(std::mt19937_64& rng, const std::string& text) {
  std::vector<std::string> lines;
  std::size_t from = 0;
  for (auto nl = text.find('\n'); nl != std::string::npos; nl = text.find('\n', from)) {
    lines.push_back(text.substr(from, nl - from + 1));
    from = nl + 1;
  }
  if (from < text.size()) lines.push_back(text.substr(from));
  std::uniform_int_distribution<int> op(0, 2), edits(1, 4);
  for (int e = edits(rng); e > 0; --e) {
    const auto pos = std::uniform_int_distribution<std::size_t>(0, lines.size())(rng);
    switch (op(rng)) {
      case 0: lines.insert(lines.begin() + static_cast<long>(pos), "new line " + std::to_string(e) + "\n"); break;
      case 1:
        if (pos < lines.size()) lines.erase(lines.begin() + static_cast<long>(pos));
        break;
      default:
        if (pos < lines.size()) lines[pos] = "changed\n";
    }
  }
  std::string out;
  for (const auto& l : lines) out += l;
  return out;
}

}  // namespace

TEST(Diff, HeadersAndHunk) {
  const std::string a = "1\n2\n3\n4\n5\n6\n7\n8\n";
  const std::string b = "1\n2\n3\n4\nX\n5\n6\n7\n8\n";
  EXPECT_EQ(make_unified_diff(a, b, "src/F.java"),
            "--- a/src/F.java\n+++ b/src/F.java\n@@ -2,6 +2,7 @@\n 2\n 3\n 4\n+X\n 5\n 6\n 7\n");
}

TEST(Diff, IdenticalIsEmpty) { EXPECT_EQ(make_unified_diff("a\n", "a\n", "f"), ""); }

TEST(Diff, NoNewlineMarker) {
  const auto d = make_unified_diff("a\nb", "a\nb\nc", "f");
  EXPECT_NE(d.find("\\ No newline at end of file"), std::string::npos);
  EXPECT_EQ(apply_patch("a\nb", d), "a\nb\nc");
  EXPECT_EQ(revert_patch("a\nb\nc", d), "a\nb");
}

TEST(Diff, RandomRoundTrips) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 500; ++i) {
    const auto a = random_lines(rng, 30);
    const auto b = mutate(rng, a);
    const auto d = make_unified_diff(a, b, "x/F.java");
    EXPECT_EQ(apply_patch(a, d), b) << "a=" << a << "\nb=" << b << "\nd=" << d;
    EXPECT_EQ(revert_patch(b, d), a) << "a=" << a << "\nb=" << b << "\nd=" << d;
  }
}

TEST(Diff, AppliesAtOffset) {
  const std::string a = "p\nq\nr\ns\n";
  const std::string b = "p\nq\nINS\nr\ns\n";
  const auto d = make_unified_diff(a, b, "f");
  EXPECT_EQ(apply_patch("header\nmore\n" + a, d), "header\nmore\n" + b);
}

TEST(Diff, Conflict) {
  const auto d = make_unified_diff("p\nq\nr\n", "p\nX\nr\n", "f");
  try {
    apply_patch("totally\ndifferent\n", d);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::PatchConflict);
  }
}
