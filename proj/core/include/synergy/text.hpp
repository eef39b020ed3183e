#pragma once

#include <initializer_list>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace synergy {

// Shortest decimal text that parses back to exactly `value`.
std::string format_exact(double value);

// Fixed-point text with `decimals` digits after the point.
std::string format_fixed(double value, int decimals);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

// RFC-4180 style writer: fields containing separators, quotes or line
// breaks are quoted, embedded quotes doubled, rows end in CRLF-free "\n".
class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& out) : out_(out) {}

  void row(const std::vector<std::string>& fields);
  void row(std::initializer_list<std::string_view> fields);

  static std::string quote(std::string_view field);

 private:
  std::ostream& out_;
};

}  // namespace synergy
