#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace icmt {

/// Lowercase hex SHA-256 of the bytes of `data`.
std::string sha256_hex(std::string_view data);

/// Key of a rendered prompt in replay files.
inline std::string prompt_hash(std::string_view prompt) { return sha256_hex(prompt); }

/// Key of a source-scoring request: the hash of context followed directly by
/// the continuation.
std::string scoring_hash(std::string_view context, std::string_view continuation);

/// SHA-256 of a file's contents. Throws ConfigError when unreadable.
std::string file_sha256(const std::filesystem::path& path);

} // namespace icmt
