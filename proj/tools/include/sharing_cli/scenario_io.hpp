#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "sharing/scenario.hpp"
#include "sharing/sweeps.hpp"

namespace sharing::cli {

/// Malformed or invalid scenario file. Syntax errors carry a 1-based
/// line/column; schema errors carry the JSON pointer of the offending value.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& message, int line, int column, std::string pointer);
  int line() const { return line_; }
  int column() const { return column_; }
  const std::string& pointer() const { return pointer_; }

 private:
  int line_;
  int column_;
  std::string pointer_;
};

/// Everything a scenario file can carry. Sweep sections are optional and only
/// read by the commands that use them.
struct ScenarioFile {
  Scenario scenario;
  std::optional<Eigen::VectorXd> bids;
  std::vector<double> flow_grid;
  std::vector<int> counts;
  int per_count = 10;
  std::vector<int> partitions;
  RandomRanges ranges;
  std::optional<std::uint64_t> seed;
  std::string digest;  // FNV-1a 64 of the raw file bytes, hex
};

ScenarioFile parse_scenario(std::string_view text);

/// Reads and parses a file. Unreadable files raise ParseError at 0:0.
ScenarioFile load_scenario(const std::string& path);

std::string fnv1a64_hex(std::string_view bytes);

using Cell = std::variant<std::monostate, double, long long, std::string>;

/// Deterministic CSV text: comment lines, one header, rows. Doubles are printed
/// with `precision` significant digits; negative zero prints as 0.
class CsvWriter {
 public:
  explicit CsvWriter(int precision = 6) : precision_(precision) {}

  void comment(const std::string& text);
  void header(const std::vector<std::string>& names);
  void row(const std::vector<Cell>& cells);
  const std::string& str() const { return out_; }
  std::string format(double value) const;

 private:
  int precision_;
  std::size_t columns_ = 0;
  std::string out_;
};

}  // namespace sharing::cli
