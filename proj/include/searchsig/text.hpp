#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace searchsig {

/// Six significant digits, trailing zeros kept ("0.500000", "44.4444").
/// Every real number written by the toolkit goes through this.
std::string format_real(double value);

std::optional<std::int64_t> parse_int64(std::string_view text);
/// Accepts anything std::from_chars accepts, including "nan" and "inf";
/// callers decide whether non-finite values are legal.
std::optional<double> parse_real(std::string_view text);

std::string_view trim(std::string_view text);
std::string to_lower(std::string_view text);
std::vector<std::string_view> split(std::string_view text, char delimiter);
std::string join(const std::vector<std::string>& parts, std::string_view delimiter);

struct CsvRow {
  std::size_t line = 0;  // 1-based; the header is line 1
  std::vector<std::string_view> fields;
};

/// A comma-delimited, unquoted, header-first table. The header must equal
/// `expected_header` exactly (or, when `header_prefix` is set, start with it).
class CsvFile {
 public:
  static CsvFile read(const std::filesystem::path& path, std::string_view expected_header,
                      bool header_prefix = false);

  const std::vector<std::string_view>& header() const { return header_; }
  const std::vector<CsvRow>& rows() const { return rows_; }

 private:
  std::string content_;
  std::vector<std::string_view> header_;
  std::vector<CsvRow> rows_;
};

std::string read_text(const std::filesystem::path& path);

/// Writes to a sibling temporary file and renames it over `path`, so
/// readers never observe a partially written file.
void write_text_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace searchsig
