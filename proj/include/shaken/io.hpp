#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "shaken/format.hpp"
#include "shaken/measures.hpp"

namespace shaken {

using Value = std::variant<std::int64_t, double, std::string>;

// Rows of result records sharing one column list.
struct ResultTable {
  std::vector<std::string> columns;
  std::vector<std::vector<Value>> rows;

  void add(std::vector<Value> row) {
    if (row.size() != columns.size()) throw std::invalid_argument("row width does not match the column list");
    rows.push_back(std::move(row));
  }

  friend bool operator==(const ResultTable&, const ResultTable&) = default;
};

enum class OutputFormat { csv, jsonl };

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string csv_field(const Value& v) {
  if (const auto* i = std::get_if<std::int64_t>(&v)) return std::to_string(*i);
  if (const auto* d = std::get_if<double>(&v)) return format_double(*d);
  const auto& s = std::get<std::string>(v);
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

inline std::string json_string(const std::string& s) {
  std::string out = "\"";
  for (unsigned char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (c < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04x", c);
          out += buf;
        } else {
          out += static_cast<char>(c);
        }
    }
  }
  return out + '"';
}

inline std::string json_value(const Value& v) {
  if (const auto* i = std::get_if<std::int64_t>(&v)) return std::to_string(*i);
  if (const auto* d = std::get_if<double>(&v)) {
    if (!std::isfinite(*d)) return "null";
    return format_double(*d);
  }
  return json_string(std::get<std::string>(v));
}

// Integers stay integers, anything else numeric becomes a double.
inline Value parse_scalar(const std::string& s) {
  if (s.empty()) return s;
  std::size_t used = 0;
  try {
    const long long i = std::stoll(s, &used);
    if (used == s.size()) return static_cast<std::int64_t>(i);
  } catch (const std::exception&) {
  }
  try {
    const double d = std::stod(s, &used);
    if (used == s.size()) return d;
  } catch (const std::exception&) {
  }
  return s;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace detail

// CSV: header row, LF endings. JSON-lines: one object per record, keys in
// column order. Doubles carry 17 significant digits.
inline void serialize_results(const ResultTable& t, OutputFormat format, std::ostream& os) {
  if (format == OutputFormat::csv) {
    for (std::size_t c = 0; c < t.columns.size(); ++c) os << (c ? "," : "") << detail::csv_field(t.columns[c]);
    os << '\n';
    for (const auto& row : t.rows) {
      for (std::size_t c = 0; c < row.size(); ++c) os << (c ? "," : "") << detail::csv_field(row[c]);
      os << '\n';
    }
    return;
  }
  for (const auto& row : t.rows) {
    os << '{';
    for (std::size_t c = 0; c < row.size(); ++c)
      os << (c ? "," : "") << detail::json_string(t.columns[c]) << ':' << detail::json_value(row[c]);
    os << "}\n";
  }
}

inline std::string serialize_results(const ResultTable& t, OutputFormat format) {
  std::ostringstream os;
  serialize_results(t, format, os);
  return os.str();
}

inline void serialize_results(const ResultTable& t, OutputFormat format, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  serialize_results(t, format, os);
  if (!os.flush()) throw IoError("write failed: " + path.string());
}

inline ResultTable read_csv(std::istream& is) {
  ResultTable t;
  std::string line;
  if (!std::getline(is, line)) return t;
  t.columns = detail::split_csv_line(line);
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<Value> row;
    for (const auto& f : detail::split_csv_line(line)) row.push_back(detail::parse_scalar(f));
    t.add(std::move(row));
  }
  return t;
}

inline ResultTable read_jsonl(std::istream& is) {
  ResultTable t;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto obj = nlohmann::ordered_json::parse(line);
    if (t.columns.empty())
      for (const auto& [k, v] : obj.items()) t.columns.push_back(k);
    std::vector<Value> row;
    for (const auto& c : t.columns) {
      const auto& v = obj.at(c);
      if (v.is_number_integer()) row.push_back(v.get<std::int64_t>());
      else if (v.is_number()) row.push_back(v.get<double>());
      else if (v.is_null()) row.push_back(std::numeric_limits<double>::quiet_NaN());
      else row.push_back(v.get<std::string>());
    }
    t.add(std::move(row));
  }
  return t;
}

// Binary PGM (P5, maxval 255). Image rows run top to bottom, so lattice row
// n-1 is printed first and "up" points up.
inline void write_pgm(std::ostream& os, int width, int height, const std::vector<std::uint8_t>& pixels) {
  os << "P5\n" << width << ' ' << height << "\n255\n";
  os.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
}

inline std::vector<std::uint8_t> layer_pixels(const SpinLayer& s, int n) {
  std::vector<std::uint8_t> px(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c)
      px[static_cast<std::size_t>(n - 1 - r) * static_cast<std::size_t>(n) + static_cast<std::size_t>(c)] =
          s[static_cast<std::size_t>(r) * static_cast<std::size_t>(n) + static_cast<std::size_t>(c)] > 0 ? 255 : 0;
  return px;
}

// Both layers on a 2n x 2n grid: x^1 at (2r+1, 2c+1), x^2 offset down-left
// at (2r, 2c); the remaining pixels are mid-grey.
inline std::vector<std::uint8_t> pair_pixels(const SpinPair& p, int n) {
  const int w = 2 * n;
  std::vector<std::uint8_t> px(static_cast<std::size_t>(w) * static_cast<std::size_t>(w), 128);
  auto put = [&](int gr, int gc, Spin s) {
    px[static_cast<std::size_t>(w - 1 - gr) * static_cast<std::size_t>(w) + static_cast<std::size_t>(gc)] =
        s > 0 ? 255 : 0;
  };
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      const auto x = static_cast<std::size_t>(r) * static_cast<std::size_t>(n) + static_cast<std::size_t>(c);
      put(2 * r + 1, 2 * c + 1, p.first[x]);
      put(2 * r, 2 * c, p.second[x]);
    }
  }
  return px;
}

inline void write_snapshot(const SpinLayer& s, int n, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  write_pgm(os, n, n, layer_pixels(s, n));
  if (!os.flush()) throw IoError("write failed: " + path.string());
}

inline void write_snapshot(const SpinPair& p, int n, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  write_pgm(os, 2 * n, 2 * n, pair_pixels(p, n));
  if (!os.flush()) throw IoError("write failed: " + path.string());
}

}  // namespace shaken
