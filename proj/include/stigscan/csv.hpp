#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace stigscan {

// Header-row CSV table (RFC 4180 quoting, embedded newlines allowed).
class CsvTable {
 public:
  CsvTable() = default;
  CsvTable(std::vector<std::string> header, std::vector<std::vector<std::string>> rows, std::string source)
      : header_(std::move(header)), rows_(std::move(rows)), source_(std::move(source)) {}

  const std::vector<std::string>& header() const { return header_; }
  const std::vector<std::vector<std::string>>& rows() const { return rows_; }
  const std::string& source() const { return source_; }
  std::size_t size() const { return rows_.size(); }

  // Case-insensitive header lookup.
  std::optional<std::size_t> find_column(std::string_view name) const;
  // Throws MissingColumn naming both the column and the file.
  std::size_t require_column(std::string_view name) const;

  // Empty string when the row is short.
  const std::string& cell(std::size_t row, std::size_t column) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
  std::string source_;
};

CsvTable parse_csv(std::string_view text, std::string source = "<memory>");
CsvTable read_csv(const std::filesystem::path& path);

std::string csv_escape(std::string_view field);
void write_csv_row(std::ostream& out, std::span<const std::string> fields);

}  // namespace stigscan
