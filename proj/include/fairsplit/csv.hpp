#pragma once

// Comma-separated tables (RFC 4180 quoting) and the dataset file format.

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "fairsplit/core.hpp"

namespace fairsplit {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// Throws std::runtime_error on unbalanced quotes or a row whose field
/// count differs from the header (message names the 1-based line).
CsvTable parse_csv(std::string_view text);
CsvTable read_csv(const std::filesystem::path& path);

std::string format_csv(const CsvTable& table);
void write_csv(const CsvTable& table, const std::filesystem::path& path);

/// Shortest decimal that reads back to the same double.
std::string format_double(double v);

/// Feature columns by name, then `label` and `group` (1-based).
void write_dataset_csv(const Dataset& ds, const std::filesystem::path& path);

/// Reads the layout written by write_dataset_csv back bit-exactly.
Dataset read_dataset_csv(const std::filesystem::path& path, Mode mode);

}  // namespace fairsplit
