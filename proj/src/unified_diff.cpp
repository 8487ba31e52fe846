#include "brt/unified_diff.hpp"

#include <algorithm>
#include <cstdlib>
#include <optional>
#include <vector>

#include "brt/error.hpp"

namespace brt {

namespace {

// A line including its terminating '\n' when present.
std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (start < text.size()) {
    const auto nl = text.find('\n', start);
    if (nl == std::string_view::npos) {
      out.push_back(text.substr(start));
      break;
    }
    out.push_back(text.substr(start, nl - start + 1));
    start = nl + 1;
  }
  return out;
}

enum class Op { Equal, Delete, Insert };

struct Edit {
  Op op;
  std::size_t old_index;  // valid for Equal/Delete
  std::size_t new_index;  // valid for Equal/Insert
};

// Myers' O((N+M)D) shortest edit script over the trimmed middle section.
std::vector<Edit> diff_lines(const std::vector<std::string_view>& a, const std::vector<std::string_view>& b) {
  std::size_t prefix = 0;
  while (prefix < a.size() && prefix < b.size() && a[prefix] == b[prefix]) ++prefix;
  std::size_t suffix = 0;
  while (suffix < a.size() - prefix && suffix < b.size() - prefix &&
         a[a.size() - 1 - suffix] == b[b.size() - 1 - suffix])
    ++suffix;

  std::vector<Edit> edits;
  for (std::size_t i = 0; i < prefix; ++i) edits.push_back({Op::Equal, i, i});

  const long n = static_cast<long>(a.size() - prefix - suffix);
  const long m = static_cast<long>(b.size() - prefix - suffix);
  auto A = [&](long i) { return a[prefix + static_cast<std::size_t>(i)]; };
  auto B = [&](long j) { return b[prefix + static_cast<std::size_t>(j)]; };

  std::vector<Edit> middle;
  const long max_d = n + m;
  if (n * m > 4'000'000 || max_d == 0) {
    // Degenerate or huge: replace wholesale.
    for (long i = 0; i < n; ++i) middle.push_back({Op::Delete, prefix + i, 0});
    for (long j = 0; j < m; ++j) middle.push_back({Op::Insert, 0, prefix + j});
  } else {
    const long offset = max_d;
    std::vector<long> v(2 * max_d + 2, 0);
    std::vector<std::vector<long>> trace;
    long found_d = -1;
    for (long d = 0; d <= max_d && found_d < 0; ++d) {
      trace.push_back(v);
      for (long k = -d; k <= d; k += 2) {
        long x;
        if (k == -d || (k != d && v[offset + k - 1] < v[offset + k + 1])) x = v[offset + k + 1];
        else x = v[offset + k - 1] + 1;
        long y = x - k;
        while (x < n && y < m && A(x) == B(y)) {
          ++x;
          ++y;
        }
        v[offset + k] = x;
        if (x >= n && y >= m) {
          found_d = d;
          break;
        }
      }
    }
    // Backtrack.
    long x = n, y = m;
    for (long d = found_d; d >= 0; --d) {
      const auto& vd = trace[static_cast<std::size_t>(d)];
      const long k = x - y;
      long prev_k;
      if (d == 0) {
        prev_k = 0;
      } else if (k == -d || (k != d && vd[offset + k - 1] < vd[offset + k + 1])) {
        prev_k = k + 1;
      } else {
        prev_k = k - 1;
      }
      const long prev_x = d == 0 ? 0 : vd[offset + prev_k];
      const long prev_y = prev_x - prev_k;
      while (x > prev_x && y > prev_y) {
        --x;
        --y;
        middle.push_back({Op::Equal, prefix + x, prefix + y});
      }
      if (d > 0) {
        if (x == prev_x) middle.push_back({Op::Insert, 0, prefix + prev_y});
        else middle.push_back({Op::Delete, prefix + prev_x, 0});
      }
      x = prev_x;
      y = prev_y;
    }
    std::reverse(middle.begin(), middle.end());
  }
  edits.insert(edits.end(), middle.begin(), middle.end());
  for (std::size_t i = 0; i < suffix; ++i)
    edits.push_back({Op::Equal, a.size() - suffix + i, b.size() - suffix + i});
  return edits;
}

void emit_line(std::string& out, char prefix, std::string_view line) {
  out += prefix;
  if (!line.empty() && line.back() == '\n') {
    out += line;
  } else {
    out += line;
    out += "\n\\ No newline at end of file\n";
  }
}

std::string range(std::size_t start, std::size_t len) {
  // Unified diff convention: an empty range names the line before it.
  const std::size_t shown = len == 0 ? start : start + 1;
  return std::to_string(shown) + "," + std::to_string(len);
}

}  // namespace

std::string make_unified_diff(std::string_view old_text, std::string_view new_text, std::string_view path,
                              int context) {
  if (old_text == new_text) return {};
  const auto a = split_lines(old_text);
  const auto b = split_lines(new_text);
  const auto edits = diff_lines(a, b);

  std::string out;
  out += "--- a/" + std::string(path) + "\n";
  out += "+++ b/" + std::string(path) + "\n";

  const auto ctx = static_cast<std::size_t>(std::max(0, context));
  std::size_t i = 0;
  while (i < edits.size()) {
    if (edits[i].op == Op::Equal) {
      ++i;
      continue;
    }
    // Hunk spans changes separated by at most 2*ctx equal lines.
    std::size_t begin = i >= ctx ? i - ctx : 0;
    while (begin < i && edits[begin].op != Op::Equal) ++begin;
    std::size_t end = i;
    std::size_t last_change = i;
    while (end < edits.size()) {
      if (edits[end].op != Op::Equal) {
        last_change = end;
      } else if (end - last_change > 2 * ctx) {
        break;
      }
      ++end;
    }
    end = std::min(edits.size(), last_change + 1 + ctx);

    std::size_t old_start = 0, new_start = 0, old_len = 0, new_len = 0;
    // Starting positions: count lines of each side before `begin`.
    for (std::size_t k = 0; k < begin; ++k) {
      if (edits[k].op != Op::Insert) ++old_start;
      if (edits[k].op != Op::Delete) ++new_start;
    }
    std::string body;
    for (std::size_t k = begin; k < end; ++k) {
      const auto& e = edits[k];
      switch (e.op) {
        case Op::Equal:
          emit_line(body, ' ', a[e.old_index]);
          ++old_len;
          ++new_len;
          break;
        case Op::Delete:
          emit_line(body, '-', a[e.old_index]);
          ++old_len;
          break;
        case Op::Insert:
          emit_line(body, '+', b[e.new_index]);
          ++new_len;
          break;
      }
    }
    out += "@@ -" + range(old_start, old_len) + " +" + range(new_start, new_len) + " @@\n";
    out += body;
    i = end;
  }
  return out;
}

namespace {

struct Hunk {
  std::size_t old_start = 0;  // 0-based line index where the hunk applies
  std::vector<std::string> old_lines;
  std::vector<std::string> new_lines;
};

std::vector<Hunk> parse_patch(std::string_view patch) {
  std::vector<Hunk> hunks;
  const auto lines = split_lines(patch);
  Hunk* cur = nullptr;
  // Which side(s) the previous body line went to, for "\ No newline" markers.
  int last_side = 0;  // 1 old, 2 new, 3 both
  for (auto raw : lines) {
    std::string_view line = raw;
    if (!line.empty() && line.back() == '\n') line.remove_suffix(1);
    if (line.rfind("--- ", 0) == 0 || line.rfind("+++ ", 0) == 0) {
      if (!cur || line.rfind("--- ", 0) == 0) continue;
    }
    if (line.rfind("@@ ", 0) == 0) {
      const auto minus = line.find('-');
      if (minus == std::string_view::npos) throw Error(ErrorKind::PatchConflict, "bad hunk header");
      const long start = std::strtol(std::string(line.substr(minus + 1)).c_str(), nullptr, 10);
      const auto comma = line.find(',', minus);
      const auto space = line.find(' ', minus);
      long len = 1;
      if (comma != std::string_view::npos && comma < space)
        len = std::strtol(std::string(line.substr(comma + 1)).c_str(), nullptr, 10);
      hunks.emplace_back();
      cur = &hunks.back();
      cur->old_start = static_cast<std::size_t>(len == 0 ? start : std::max(0L, start - 1));
      last_side = 0;
      continue;
    }
    if (!cur) continue;
    if (line.rfind("\\", 0) == 0) {
      auto strip = [](std::string& s) {
        if (!s.empty() && s.back() == '\n') s.pop_back();
      };
      if ((last_side & 1) && !cur->old_lines.empty()) strip(cur->old_lines.back());
      if ((last_side & 2) && !cur->new_lines.empty()) strip(cur->new_lines.back());
      continue;
    }
    if (line.empty()) {
      // Tolerate editors that drop the leading space on blank context lines.
      cur->old_lines.emplace_back("\n");
      cur->new_lines.emplace_back("\n");
      last_side = 3;
      continue;
    }
    const std::string content = std::string(line.substr(1)) + "\n";
    switch (line[0]) {
      case ' ':
        cur->old_lines.push_back(content);
        cur->new_lines.push_back(content);
        last_side = 3;
        break;
      case '-':
        cur->old_lines.push_back(content);
        last_side = 1;
        break;
      case '+':
        cur->new_lines.push_back(content);
        last_side = 2;
        break;
      default:
        throw Error(ErrorKind::PatchConflict, "unexpected patch line: " + std::string(line));
    }
  }
  return hunks;
}

bool matches_at(const std::vector<std::string>& lines, std::size_t pos, const std::vector<std::string>& block) {
  if (pos + block.size() > lines.size()) return false;
  for (std::size_t k = 0; k < block.size(); ++k)
    if (lines[pos + k] != block[k]) return false;
  return true;
}

std::string apply_hunks(std::string_view text, const std::vector<Hunk>& hunks, bool reverse) {
  std::vector<std::string> lines;
  for (auto l : split_lines(text)) lines.emplace_back(l);

  long shift = 0;  // net line delta from hunks applied so far
  std::size_t floor = 0;
  for (const auto& h : hunks) {
    const auto& from = reverse ? h.new_lines : h.old_lines;
    const auto& to = reverse ? h.old_lines : h.new_lines;
    // Expected position in the current text.
    const long expected_l = static_cast<long>(h.old_start) + (reverse ? 0 : shift);
    std::optional<std::size_t> at;
    const long max_off = static_cast<long>(lines.size()) + 1;
    for (long off = 0; off <= max_off && !at; ++off) {
      for (long cand : {expected_l + off, expected_l - off}) {
        if (cand < static_cast<long>(floor) || cand > static_cast<long>(lines.size())) continue;
        if (matches_at(lines, static_cast<std::size_t>(cand), from)) {
          at = static_cast<std::size_t>(cand);
          break;
        }
      }
    }
    if (!at) throw Error(ErrorKind::PatchConflict, "hunk at line " + std::to_string(h.old_start + 1) + " does not apply");
    lines.erase(lines.begin() + static_cast<long>(*at), lines.begin() + static_cast<long>(*at + from.size()));
    lines.insert(lines.begin() + static_cast<long>(*at), to.begin(), to.end());
    floor = *at + to.size();
    shift += static_cast<long>(to.size()) - static_cast<long>(from.size());
  }
  std::string out;
  for (const auto& l : lines) out += l;
  return out;
}

}  // namespace

std::string apply_patch(std::string_view original, std::string_view patch) {
  return apply_hunks(original, parse_patch(patch), false);
}

std::string revert_patch(std::string_view modified, std::string_view patch) {
  auto hunks = parse_patch(patch);
  // Hunk positions are recorded against the original; on the modified text
  // each hunk sits after the growth of the ones before it.
  long shift = 0;
  for (auto& h : hunks) {
    const auto start = static_cast<long>(h.old_start) + shift;
    shift += static_cast<long>(h.new_lines.size()) - static_cast<long>(h.old_lines.size());
    h.old_start = static_cast<std::size_t>(std::max(0L, start));
  }
  return apply_hunks(modified, hunks, true);
}

}  // namespace brt
