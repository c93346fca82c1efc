#include "sgdvi/curve_file.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "sgdvi/errors.hpp"

namespace sgdvi {
namespace {

constexpr std::string_view kFormatKey = "format";

std::string format_tag() { return "sgdvi-curve " + std::to_string(kCurveFormatVersion); }

double parse_number(std::string_view cell, std::size_t line) {
  if (cell == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (cell == "inf") return std::numeric_limits<double>::infinity();
  if (cell == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size())
    throw ParseError("curve file: bad number '" + std::string(cell) + "'", line);
  return v;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) return out;
    start = comma + 1;
  }
}

}  // namespace

const std::string* CurveFile::find(std::string_view key) const {
  for (const auto& [k, v] : header)
    if (k == key) return &v;
  return nullptr;
}

std::size_t CurveFile::column_index(std::string_view name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return i;
  throw ParseError("curve file has no column '" + std::string(name) + "'");
}

std::vector<double> CurveFile::column(std::string_view name) const {
  const std::size_t c = column_index(name);
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& row : rows) out.push_back(row[c]);
  return out;
}

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

void write_curve_file(const std::filesystem::path& path, const CurveFile& curve) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << "# " << kFormatKey << ": " << format_tag() << '\n';
  for (const auto& [k, v] : curve.header) {
    if (k.find(':') != std::string::npos || v.find('\n') != std::string::npos)
      throw Error("curve header entry '" + k + "' cannot be written on one line");
    out << "# " << k << ": " << v << '\n';
  }
  for (std::size_t i = 0; i < curve.columns.size(); ++i) out << (i ? "," : "") << curve.columns[i];
  out << '\n';
  for (const auto& row : curve.rows) {
    if (row.size() != curve.columns.size())
      throw DimensionMismatch("curve row", curve.columns.size(), row.size());
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_number(row[i]);
    out << '\n';
  }
  if (!out) throw Error("error while writing '" + path.string() + "'");
}

CurveFile read_curve_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open curve file '" + path.string() + "'");
  CurveFile curve;
  std::string line;
  std::size_t lineno = 0;
  bool have_columns = false;
  bool have_format = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.rfind("# ", 0) == 0 && !have_columns) {
      const auto colon = line.find(": ", 2);
      if (colon == std::string::npos) throw ParseError("curve file: bad header line", lineno);
      std::string key = line.substr(2, colon - 2);
      std::string value = line.substr(colon + 2);
      if (key == kFormatKey) {
        if (value != format_tag()) throw ParseError("curve file: unsupported format '" + value + "'", lineno);
        have_format = true;
        continue;
      }
      curve.header.emplace_back(std::move(key), std::move(value));
      continue;
    }
    if (line.empty()) continue;
    if (!have_format) throw ParseError("curve file: missing format line", lineno);
    if (!have_columns) {
      for (auto name : split_commas(line)) curve.columns.emplace_back(name);
      have_columns = true;
      continue;
    }
    const auto cells = split_commas(line);
    if (cells.size() != curve.columns.size())
      throw ParseError("curve file: expected " + std::to_string(curve.columns.size()) + " cells, got " +
                           std::to_string(cells.size()),
                       lineno);
    std::vector<double> row;
    row.reserve(cells.size());
    for (auto cell : cells) row.push_back(parse_number(cell, lineno));
    curve.rows.push_back(std::move(row));
  }
  if (!have_format) throw ParseError("curve file '" + path.string() + "' has no format line");
  return curve;
}

}  // namespace sgdvi
