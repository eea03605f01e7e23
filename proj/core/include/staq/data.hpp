#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace staq {

/// Column-oriented table of raw CSV cells.
class DataTable {
 public:
  DataTable() = default;
  DataTable(std::vector<std::string> names, std::vector<std::vector<std::string>> columns);

  std::size_t num_rows() const noexcept { return columns_.empty() ? 0 : columns_.front().size(); }
  std::size_t num_columns() const noexcept { return names_.size(); }
  const std::vector<std::string>& names() const noexcept { return names_; }

  bool has_column(const std::string& name) const;
  const std::vector<std::string>& column(const std::string& name) const;

  /// Column parsed as doubles; throws DataError on unparsable cells.
  std::vector<double> numeric(const std::string& name) const;

  void add_column(std::string name, std::vector<std::string> cells);
  void add_numeric_column(std::string name, const std::vector<double>& values);

  /// Keep only rows where none of `used` is empty or NA. Returns the number
  /// of dropped rows.
  std::size_t drop_missing(const std::vector<std::string>& used);

 private:
  std::size_t index_of(const std::string& name) const;

  std::vector<std::string> names_;
  std::vector<std::vector<std::string>> columns_;
};

bool is_missing(const std::string& cell);

/// Comma separated, header row required, dot decimal.
DataTable read_csv(std::istream& in);
DataTable read_csv(const std::filesystem::path& path);
void write_csv(std::ostream& out, const DataTable& table);
void write_csv(const std::filesystem::path& path, const DataTable& table);

/// Shortest round-trip formatting of a double.
std::string format_double(double value);

/// 64-bit FNV-1a of a file's bytes, hex encoded.
std::string file_checksum(const std::filesystem::path& path);

}  // namespace staq
