#pragma once

#include <string>

#include "json.hpp"

namespace lookahead {

/// Canonical JSON serialization: object keys in sorted order, doubles printed
/// with 17 significant digits (lossless for IEEE double), arrays on a single
/// line. Used for every artifact the tools write so golden-file comparisons
/// are byte-stable.
std::string canonical_dump(const nlohmann::json& value, int indent = 2);

/// Single-line canonical form (for JSONL records).
std::string canonical_dump_compact(const nlohmann::json& value);

void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

/// FNV-1a 64-bit hash of a file's bytes.
std::uint64_t hash_file(const std::filesystem::path& path);

}  // namespace lookahead
