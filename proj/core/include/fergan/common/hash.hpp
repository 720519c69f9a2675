#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>

namespace fergan {

/// Lowercase hex SHA-256 of a byte string.
std::string sha256_hex(std::string_view bytes);
std::string sha256_hex(std::span<const std::byte> bytes);

/// SHA-256 of a file's contents.
std::string sha256_file(const std::filesystem::path& path);

}  // namespace fergan
