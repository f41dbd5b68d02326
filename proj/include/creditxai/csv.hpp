#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace creditxai::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Index of a header column, or -1.
  int column(std::string_view name) const;
};

// RFC 4180-style fields: quoted fields may contain commas, doubled quotes
// and newlines. Rows with a field count different from the header raise
// CorruptRecord with the 1-based line number.
Table parse(std::string_view text);
Table read_file(const std::filesystem::path& path);

std::string escape(std::string_view field);
std::string join_row(const std::vector<std::string>& fields);

}  // namespace creditxai::csv
