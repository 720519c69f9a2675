#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace fergan {

/// Writes via a sibling temporary file and rename, so readers never observe a
/// partially written file.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

std::string read_file(const std::filesystem::path& path);

/// Creates the directory (and parents) or throws DataError if that fails or
/// the path exists and is not a writable directory.
void ensure_directory(const std::filesystem::path& dir);

}  // namespace fergan
