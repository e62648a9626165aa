#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace uknow {

// Lowercase hex SHA-256 of a byte string.
std::string sha256_hex(std::string_view bytes);

// Digest of a file, or of every regular file under a directory (sorted by
// relative path, path and content both hashed).
std::string digest_path(const std::filesystem::path& path);

// Writes to a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

}  // namespace uknow
