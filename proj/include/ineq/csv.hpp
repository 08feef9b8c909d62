#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <istream>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "ineq/error.hpp"

namespace ineq {

/// Line-oriented CSV reader.
///
/// Supports double-quoted fields with "" escapes but not embedded newlines,
/// which none of the input formats need. An optional byte budget lets several
/// readers share one file split at line boundaries.
class csv_reader {
 public:
  csv_reader(std::istream& in, std::string name,
             std::uint64_t byte_budget = std::numeric_limits<std::uint64_t>::max())
      : in_(in), name_(std::move(name)), budget_(byte_budget) {}

  /// Reads the first line and checks it names exactly `columns`.
  void expect_header(std::initializer_list<std::string_view> columns) {
    std::vector<std::string_view> fields;
    if (!read_line(fields)) {
      throw validation_error(errc::data_error, name_ + ": missing header");
    }
    bool ok = fields.size() == columns.size();
    std::size_t i = 0;
    for (auto col : columns) {
      if (!ok) break;
      ok = fields[i++] == col;
    }
    if (!ok) {
      std::string expected;
      for (auto col : columns) {
        if (!expected.empty()) expected += ',';
        expected += col;
      }
      throw validation_error(errc::data_error,
                             name_ + ": expected header '" + expected + "', got '" + raw_ + "'");
    }
  }

  /// Next data row, skipping blank lines. Returns false at end of input.
  bool next(std::vector<std::string_view>& fields) {
    while (read_line(fields)) {
      if (!(fields.size() == 1 && fields[0].empty())) return true;
    }
    return false;
  }

  /// 1-based number of the line most recently returned.
  std::uint64_t line_number() const noexcept { return line_; }
  const std::string& name() const noexcept { return name_; }

 private:
  bool read_line(std::vector<std::string_view>& fields) {
    fields.clear();
    if (consumed_ >= budget_) return false;
    if (!std::getline(in_, line_buf_)) {
      if (in_.bad()) throw io_error(name_ + ": read failed");
      return false;
    }
    consumed_ += line_buf_.size() + (in_.eof() ? 0 : 1);
    ++line_;
    if (!line_buf_.empty() && line_buf_.back() == '\r') line_buf_.pop_back();
    if (line_ == 1 && line_buf_.starts_with("\xEF\xBB\xBF")) line_buf_.erase(0, 3);
    if (line_ == 1) raw_ = line_buf_;
    split(fields);
    return true;
  }

  // Splits line_buf_ in place; quoted fields are unescaped toward the front
  // of their own span so the views stay valid.
  void split(std::vector<std::string_view>& fields) {
    char* data = line_buf_.data();
    const std::size_t len = line_buf_.size();
    std::size_t i = 0;
    while (true) {
      if (i < len && data[i] == '"') {
        std::size_t out = i;
        std::size_t start = i;
        ++i;
        while (i < len) {
          if (data[i] == '"') {
            if (i + 1 < len && data[i + 1] == '"') {
              data[out++] = '"';
              i += 2;
            } else {
              ++i;
              break;
            }
          } else {
            data[out++] = data[i++];
          }
        }
        fields.emplace_back(data + start, out - start);
        while (i < len && data[i] != ',') ++i;
      } else {
        std::size_t start = i;
        while (i < len && data[i] != ',') ++i;
        fields.emplace_back(data + start, i - start);
      }
      if (i >= len) break;
      ++i;  // comma
      if (i == len) {
        fields.emplace_back();
        break;
      }
    }
  }

  std::istream& in_;
  std::string name_;
  std::uint64_t budget_;
  std::uint64_t consumed_ = 0;
  std::uint64_t line_ = 0;
  std::string line_buf_;
  std::string raw_;
};

/// Parses a decimal literal. Returns nullopt on junk or trailing characters.
inline std::optional<double> parse_double(std::string_view s) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

/// Quotes a field for CSV output when it contains separators or quotes.
inline std::string csv_escape(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace ineq
