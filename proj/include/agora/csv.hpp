#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "agora/error.hpp"

namespace agora::csv {

// Shortest representation that round-trips exactly; keeps CSV output
// byte-stable across runs.
inline std::string format_double(double v) {
  if (v == 0.0) return "0";  // folds -0
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) throw Error(errc::domain_error, "unformattable double");
  return std::string(buf, end);
}

inline std::string format_optional(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string{};
}

// Fixed decimals, for machine (4 d.p.) and human (2 d.p.) ratio output.
inline std::string format_fixed(double v, int decimals) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, decimals);
  if (ec != std::errc{}) throw Error(errc::domain_error, "unformattable double");
  return std::string(buf, end);
}

inline std::vector<std::string> split(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.emplace_back(line.substr(start));
      break;
    }
    out.emplace_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

// Row-oriented reader that keeps track of line numbers for error messages.
class Reader {
public:
  Reader(std::istream& in, std::string_view expected_header, std::string source_name = "csv")
      : in_(in), source_(std::move(source_name)) {
    std::string header;
    if (!next_line(header)) {
      throw Error(errc::parse_error, source_ + ": missing header");
    }
    if (header != expected_header) {
      throw Error(errc::parse_error, source_ + ": line 1: unexpected header '" + header + "'");
    }
    columns_ = split(expected_header);
  }

  // Returns false at end of input. Blank lines are skipped.
  bool next(std::vector<std::string>& fields) {
    std::string line;
    while (next_line(line)) {
      if (line.empty()) continue;
      fields = split(line);
      if (fields.size() != columns_.size()) {
        fail("", "expected " + std::to_string(columns_.size()) + " fields, got " +
                     std::to_string(fields.size()));
      }
      return true;
    }
    return false;
  }

  std::size_t line_number() const noexcept { return line_no_; }

  [[noreturn]] void fail(std::string_view field, const std::string& what) const {
    std::string msg = source_ + ": line " + std::to_string(line_no_);
    if (!field.empty()) msg += ": field '" + std::string(field) + "'";
    msg += ": " + what;
    throw Error(errc::parse_error, msg);
  }

  double to_double(const std::string& s, std::string_view field) const {
    double v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) {
      fail(field, "not a number: '" + s + "'");
    }
    return v;
  }

  std::optional<double> to_optional_double(const std::string& s, std::string_view field) const {
    if (s.empty()) return std::nullopt;
    return to_double(s, field);
  }

  std::int64_t to_int(const std::string& s, std::string_view field) const {
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) {
      fail(field, "not an integer: '" + s + "'");
    }
    return v;
  }

private:
  bool next_line(std::string& line) {
    if (!std::getline(in_, line)) return false;
    ++line_no_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  }

  std::istream& in_;
  std::string source_;
  std::vector<std::string> columns_;
  std::size_t line_no_ = 0;
};

}  // namespace agora::csv
