#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace sqq::csv {

struct Record {
  std::size_t line = 0;  // 1-based line where the record starts
  std::vector<std::string> fields;
};

/// RFC-4180 records. Lines starting with '#' outside a quoted field are
/// comments and are skipped, as are blank lines.
std::vector<Record> parse(std::string_view text);

/// Quotes a field when it contains a separator, quote, or line break.
std::string quote(std::string_view field);

/// Shortest decimal that parses back to the same double.
std::string format_number(double value);

/// Strict full-field parse; returns false on anything but a finite number.
bool parse_number(std::string_view text, double& out);

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  void comment(std::string_view line);
  void row(const std::vector<std::string>& fields);

 private:
  std::ostream& out_;
};

}  // namespace sqq::csv
