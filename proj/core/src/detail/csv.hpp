#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace tdvim::detail {

// Minimal RFC 4180 reader: quoted fields, doubled quotes, CRLF tolerated.
// Embedded newlines inside quotes are not supported.
std::vector<std::string> split_csv_line(std::string_view line);

std::vector<std::string> split_lines(std::string_view text);

std::string csv_field(std::string_view value);

std::string trim(std::string_view s);

std::string read_text_file(const std::string& path);

// Formats with fixed decimals using the C locale.
std::string format_fixed(double value, int decimals);

// Shortest text that parses back to the same double.
std::string format_roundtrip(double value);

}  // namespace tdvim::detail
