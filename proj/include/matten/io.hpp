// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace matten {

/// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::string& path, std::string_view content);

std::string read_file(const std::string& path);

/// Round-trip decimal for a double (17 significant digits).
std::string format_double(double value);

/// Whole-string number parsing; throws ArgumentError on trailing junk.
double parse_double(std::string_view text);
std::size_t parse_size(std::string_view text);

std::vector<std::string_view> split_view(std::string_view text, char sep);
std::string_view trim(std::string_view text);

}  // namespace matten
