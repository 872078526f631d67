#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace lfs::path {

/// True for "/" or "/c1/c2/..." with non-empty components and no "." or "..".
bool is_normalized(std::string_view p);

/// Collapses duplicate separators and resolves "." / "..". Throws
/// std::invalid_argument for relative or empty input.
std::string normalize(std::string_view p);

/// Components below the root; "/" yields an empty list.
std::vector<std::string_view> components(std::string_view p);

/// Parent directory of a normalized path. The root is its own parent.
std::string_view parent(std::string_view p);

std::string_view basename(std::string_view p);

std::string join(std::string_view dir, std::string_view name);

/// True when `p` equals `prefix` or lies below it at a component boundary.
bool has_prefix(std::string_view p, std::string_view prefix);

/// Rewrites `p` (which must have `from` as prefix) to live under `to`.
std::string rebase(std::string_view p, std::string_view from, std::string_view to);

std::size_t depth(std::string_view p);

}  // namespace lfs::path
