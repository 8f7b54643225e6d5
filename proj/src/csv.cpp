#include "fairsplit/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace fairsplit {

CsvTable parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false, field_started = false;
  std::size_t line = 1, record_line = 1;

  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    if (!(record.size() == 1 && record[0].empty())) records.push_back(std::move(record));
    record.clear();
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (field_started && !field.empty()) {
          throw std::runtime_error("line " + std::to_string(line) + ": quote inside unquoted field");
        }
        quoted = true;
        field_started = true;
        break;
      case ',':
        end_field();
        break;
      case '\r':
        break;
      case '\n':
        end_record();
        record_line = ++line;
        break;
      default:
        field.push_back(c);
        field_started = true;
    }
  }
  if (quoted) throw std::runtime_error("line " + std::to_string(record_line) + ": unterminated quoted field");
  if (field_started || !field.empty() || !record.empty()) end_record();

  CsvTable table;
  if (records.empty()) throw std::runtime_error("empty CSV: no header row");
  table.header = std::move(records.front());
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != table.header.size()) {
      throw std::runtime_error("row " + std::to_string(r) + ": expected " + std::to_string(table.header.size()) +
                               " fields, found " + std::to_string(records[r].size()));
    }
    table.rows.push_back(std::move(records[r]));
  }
  return table;
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str());
}

namespace {

std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

void append_record(std::string& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out.push_back(',');
    out += quote(fields[i]);
  }
  out.push_back('\n');
}

double parse_double(const std::string& s, std::size_t row, std::size_t col) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw std::runtime_error("row " + std::to_string(row + 1) + ", column " + std::to_string(col + 1) +
                             ": unparseable number '" + s + "'");
  }
  return v;
}

}  // namespace

std::string format_csv(const CsvTable& table) {
  std::string out;
  append_record(out, table.header);
  for (const auto& row : table.rows) append_record(out, row);
  return out;
}

void write_csv(const CsvTable& table, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << format_csv(table);
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw std::runtime_error("cannot format number");
  return std::string(buf, ptr);
}

void write_dataset_csv(const Dataset& ds, const std::filesystem::path& path) {
  CsvTable table;
  for (std::size_t j = 0; j < ds.cols(); ++j) {
    table.header.push_back(j < ds.columns.size() ? ds.columns[j].name : "x" + std::to_string(j + 1));
  }
  table.header.push_back("label");
  table.header.push_back("group");
  for (std::size_t i = 0; i < ds.rows(); ++i) {
    std::vector<std::string> row;
    for (double v : ds.row(i)) row.push_back(format_double(v));
    row.push_back(format_double(ds.labels[i]));
    row.push_back(std::to_string(ds.groups[i]));
    table.rows.push_back(std::move(row));
  }
  write_csv(table, path);
}

Dataset read_dataset_csv(const std::filesystem::path& path, Mode mode) {
  CsvTable table = read_csv(path);
  const std::size_t w = table.header.size();
  if (w < 2 || table.header[w - 2] != "label" || table.header[w - 1] != "group") {
    throw std::runtime_error(path.string() + ": last two columns must be 'label' and 'group'");
  }
  Dataset ds;
  ds.mode = mode;
  const std::size_t d = w - 2;
  for (std::size_t j = 0; j < d; ++j) ds.columns.push_back({table.header[j], ColumnKind::numeric});
  ds.features.resize(static_cast<Eigen::Index>(table.rows.size()), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      ds.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = parse_double(table.rows[i][j], i, j);
    }
    ds.labels.push_back(parse_double(table.rows[i][d], i, d));
    const double g = parse_double(table.rows[i][d + 1], i, d + 1);
    if (!(g >= 1.0) || g != static_cast<double>(static_cast<GroupIndex>(g))) {
      throw std::runtime_error("row " + std::to_string(i + 1) + ": bad group index");
    }
    ds.groups.push_back(static_cast<GroupIndex>(g));
    ds.group_count = std::max<std::size_t>(ds.group_count, ds.groups.back());
  }
  return ds;
}

}  // namespace fairsplit
