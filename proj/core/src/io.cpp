#include "depcen/io.hpp"

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "depcen/error.hpp"

namespace depcen {

namespace {

std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) fields.push_back(trim(field));
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double parse_number(const std::string& s, std::size_t line_no, const char* column) {
  double value = 0.0;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || s.empty()) {
    throw ParseError("line " + std::to_string(line_no) + ": cannot parse " + column + " value '" +
                     s + "'");
  }
  return value;
}

int parse_indicator(const std::string& s, std::size_t line_no, const char* column) {
  const double value = parse_number(s, line_no, column);
  if (value != 0.0 && value != 1.0) {
    throw ParseError("line " + std::to_string(line_no) + ": " + column + " must be 0 or 1, got '" +
                     s + "'");
  }
  return static_cast<int>(value);
}

}  // namespace

void write_dataset_csv(std::ostream& out, std::span<const SurvivalRecord> records) {
  out << "x,delta\n";
  for (const auto& r : records) out << format_double(r.x) << ',' << r.delta << '\n';
}

void write_dataset_csv(std::ostream& out, std::span<const RctRecord> records) {
  out << "x,delta,trt\n";
  for (const auto& r : records) {
    out << format_double(r.x) << ',' << r.delta << ',' << r.trt << '\n';
  }
}

Dataset read_dataset_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) {
      line.erase(0, 3);  // UTF-8 byte-order mark
    }
    if (trim(line).empty()) continue;
    header = split_fields(line);
    break;
  }
  if (header.empty()) throw ParseError("empty input: expected a header with x and delta");
  auto column = [&](const char* name) -> long {
    const auto it = std::find(header.begin(), header.end(), name);
    return it == header.end() ? -1 : static_cast<long>(it - header.begin());
  };
  const long x_col = column("x");
  const long delta_col = column("delta");
  const long trt_col = column("trt");
  if (x_col < 0 || delta_col < 0) {
    throw ParseError("line " + std::to_string(line_no) + ": header must name columns x and delta");
  }

  Dataset data;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != header.size()) {
      throw ParseError("line " + std::to_string(line_no) + ": expected " +
                       std::to_string(header.size()) + " fields, found " +
                       std::to_string(fields.size()));
    }
    const double x = parse_number(fields[static_cast<std::size_t>(x_col)], line_no, "x");
    if (!(x > 0.0) || !std::isfinite(x)) {
      throw ParseError("line " + std::to_string(line_no) + ": x must be positive and finite");
    }
    const int delta = parse_indicator(fields[static_cast<std::size_t>(delta_col)], line_no, "delta");
    data.records.push_back({x, delta});
    if (trt_col >= 0) {
      data.trt.push_back(parse_indicator(fields[static_cast<std::size_t>(trt_col)], line_no, "trt"));
    }
  }
  return data;
}

void write_curve_csv(std::ostream& out, std::span<const CurvePoint> steps) {
  out << "time,survival\n";
  for (const auto& p : steps) out << format_double(p.time) << ',' << format_double(p.survival) << '\n';
}

void write_file_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw ConfigError("cannot open '" + tmp.string() + "' for writing");
    os << content;
    os.flush();
    if (!os) throw ConfigError("failed writing '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) throw ConfigError("cannot move output into place at '" + path + "': " + ec.message());
}

}  // namespace depcen
