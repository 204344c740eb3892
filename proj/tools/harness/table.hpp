#pragma once

// Flat CSV tables with a fixed column order and deterministic number
// formatting (shortest round-trip form), plus the column documentation that
// goes into schema.json.

#include <filesystem>
#include <string>
#include <variant>
#include <vector>

namespace torsionlab::harness {

using Cell = std::variant<double, long long, bool, std::string>;

struct Column {
  std::string name;
  std::string unit;
  std::string description;
};

struct Table {
  std::string name;
  std::vector<Column> columns;
  std::vector<std::vector<Cell>> rows;

  void add(std::vector<Cell> row);
  std::string csv() const;
};

/// Shortest decimal form that parses back to the same double; "inf", "-inf", "nan".
std::string format_double(double v);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace torsionlab::harness
