#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace fergan::csv {

using Row = std::vector<std::string>;

/// Parses RFC 4180 text: quoted fields, doubled quotes, CRLF or LF endings.
/// Blank lines are skipped. Each row carries its 1-based line number.
struct ParsedRow {
  std::size_t line = 0;
  Row fields;
};

std::vector<ParsedRow> parse(std::string_view text);
std::vector<ParsedRow> read_file(const std::filesystem::path& path);

/// Quotes a field only when it contains a separator, quote, or newline.
std::string escape(std::string_view field);
std::string format_row(const Row& row);

}  // namespace fergan::csv
