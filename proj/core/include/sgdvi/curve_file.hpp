#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace sgdvi {

inline constexpr int kCurveFormatVersion = 1;

/// Metadata header plus a numeric table. On disk:
///
///   # format: sgdvi-curve 1
///   # key: value            (one line per header entry, in order)
///   col_a,col_b,...
///   1,0.5,...
///
/// Numbers are written with 17 significant digits so reading a file back
/// reproduces every value exactly; NaN and infinities are spelled nan/inf/-inf.
struct CurveFile {
  std::vector<std::pair<std::string, std::string>> header;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  /// Header value for `key`, or nullptr.
  const std::string* find(std::string_view key) const;
  /// All values of a column; throws ParseError for an unknown name.
  std::vector<double> column(std::string_view name) const;
  std::size_t column_index(std::string_view name) const;
};

std::string format_number(double value);

/// Throws Error when the file cannot be written. Creates parent directories.
void write_curve_file(const std::filesystem::path& path, const CurveFile& curve);

/// Throws ParseError naming the line on malformed input.
CurveFile read_curve_file(const std::filesystem::path& path);

}  // namespace sgdvi
