#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace wardlab::csv {

// Shortest round-trip decimal form (locale-independent).
std::string fmt_double(double v);
// Fixed-precision form for layout output (SVG coordinates, reports).
std::string fmt_fixed(double v, int precision);

std::string escape_field(std::string_view field);
std::string join_row(const std::vector<std::string>& fields);

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> metadata;  // leading '#' lines, verbatim

  int column(std::string_view name) const;  // -1 when absent
};

// RFC-4180-ish: quoted fields, doubled quotes, embedded commas. Leading lines
// starting with '#' are collected as metadata.
Table read_file(const std::filesystem::path& path);
Table parse(std::string_view text);

void write_file(const std::filesystem::path& path, const Table& table);

}  // namespace wardlab::csv
