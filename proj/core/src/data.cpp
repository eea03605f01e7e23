#include "staq/data.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "staq/errors.hpp"

namespace staq {

DataTable::DataTable(std::vector<std::string> names, std::vector<std::vector<std::string>> columns)
    : names_(std::move(names)), columns_(std::move(columns)) {
  if (names_.size() != columns_.size()) throw DataError("column name count does not match column count");
  for (const auto& c : columns_) {
    if (c.size() != columns_.front().size()) throw DataError("columns have different lengths");
  }
}

std::size_t DataTable::index_of(const std::string& name) const {
  const auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) throw DataError("unknown column '" + name + "'");
  return static_cast<std::size_t>(it - names_.begin());
}

bool DataTable::has_column(const std::string& name) const {
  return std::find(names_.begin(), names_.end(), name) != names_.end();
}

const std::vector<std::string>& DataTable::column(const std::string& name) const {
  return columns_[index_of(name)];
}

std::vector<double> DataTable::numeric(const std::string& name) const {
  const auto& cells = column(name);
  std::vector<double> out(cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto& s = cells[i];
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out[i]);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
      throw DataError("column '" + name + "' row " + std::to_string(i + 1) + ": not a number: '" + s + "'");
    }
  }
  return out;
}

void DataTable::add_column(std::string name, std::vector<std::string> cells) {
  if (has_column(name)) throw DataError("duplicate column '" + name + "'");
  if (!columns_.empty() && cells.size() != num_rows()) throw DataError("column '" + name + "' has wrong length");
  names_.push_back(std::move(name));
  columns_.push_back(std::move(cells));
}

void DataTable::add_numeric_column(std::string name, const std::vector<double>& values) {
  std::vector<std::string> cells;
  cells.reserve(values.size());
  for (double v : values) cells.push_back(format_double(v));
  add_column(std::move(name), std::move(cells));
}

bool is_missing(const std::string& cell) {
  return cell.empty() || cell == "NA" || cell == "NaN" || cell == "nan";
}

std::size_t DataTable::drop_missing(const std::vector<std::string>& used) {
  std::vector<std::size_t> idx;
  for (const auto& u : used) idx.push_back(index_of(u));
  std::vector<bool> keep(num_rows(), true);
  std::size_t dropped = 0;
  for (std::size_t r = 0; r < num_rows(); ++r) {
    for (auto c : idx) {
      if (is_missing(columns_[c][r])) {
        keep[r] = false;
        ++dropped;
        break;
      }
    }
  }
  if (dropped == 0) return 0;
  for (auto& col : columns_) {
    std::vector<std::string> kept;
    kept.reserve(col.size() - dropped);
    for (std::size_t r = 0; r < col.size(); ++r) {
      if (keep[r]) kept.push_back(std::move(col[r]));
    }
    col = std::move(kept);
  }
  return dropped;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field.push_back('"');
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        field.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field.push_back(ch);
    }
  }
  fields.push_back(std::move(field));
  for (auto& f : fields) {
    const auto b = f.find_first_not_of(" \t");
    const auto e = f.find_last_not_of(" \t");
    f = (b == std::string::npos) ? std::string() : f.substr(b, e - b + 1);
  }
  return fields;
}

}  // namespace

DataTable read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("CSV input is empty (header row required)");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  auto names = split_line(line);
  std::vector<std::vector<std::string>> columns(names.size());
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_line(line);
    if (fields.size() != names.size()) {
      throw DataError("CSV line " + std::to_string(row) + ": expected " + std::to_string(names.size()) +
                      " fields, found " + std::to_string(fields.size()));
    }
    for (std::size_t c = 0; c < fields.size(); ++c) columns[c].push_back(std::move(fields[c]));
  }
  for (std::size_t i = 0; i < names.size(); ++i) {
    for (std::size_t j = i + 1; j < names.size(); ++j) {
      if (names[i] == names[j]) throw DataError("duplicate CSV column '" + names[i] + "'");
    }
  }
  return DataTable(std::move(names), std::move(columns));
}

DataTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open data file " + path.string());
  return read_csv(in);
}

void write_csv(std::ostream& out, const DataTable& table) {
  const auto& names = table.names();
  for (std::size_t c = 0; c < names.size(); ++c) out << (c ? "," : "") << names[c];
  out << '\n';
  for (std::size_t r = 0; r < table.num_rows(); ++r) {
    for (std::size_t c = 0; c < names.size(); ++c) out << (c ? "," : "") << table.column(names[c])[r];
    out << '\n';
  }
}

void write_csv(const std::filesystem::path& path, const DataTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  write_csv(out, table);
}

std::string format_double(double value) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

std::string file_checksum(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 14];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
  return hex;
}

}  // namespace staq
