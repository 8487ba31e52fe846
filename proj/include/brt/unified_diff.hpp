#pragma once

#include <string>
#include <string_view>

namespace brt {

/// Line-based unified diff (`--- a/<path>` / `+++ b/<path>` headers) with
/// `\ No newline at end of file` markers where needed.
std::string make_unified_diff(std::string_view old_text, std::string_view new_text, std::string_view path,
                              int context = 3);

/// Applies a unified diff. Hunks are located at their recorded line first,
/// then at the nearest offset where their context matches.
/// Throws Error(PatchConflict) when a hunk cannot be placed.
std::string apply_patch(std::string_view original, std::string_view patch);

/// Undoes `patch` on text it was applied to.
std::string revert_patch(std::string_view modified, std::string_view patch);

}  // namespace brt
