#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace mathforge {

/// Lowercase hex SHA-256 of the given bytes.
std::string sha256_hex(std::string_view bytes);

/// SHA-256 of a file's contents. Throws Error(IoError) if unreadable.
std::string file_sha256(const std::filesystem::path& path);

} // namespace mathforge
