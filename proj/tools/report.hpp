#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace rfvar::cli {

/// Table cell: text or a real number (CSV prints 17 significant digits).
using Cell = std::variant<std::string, double>;

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

/// Result of one command: ordered metadata plus any number of tables.
struct Report {
  std::string command;
  std::vector<std::pair<std::string, std::string>> metadata;
  std::vector<Table> tables;

  void meta(std::string key, std::string value) { metadata.emplace_back(std::move(key), std::move(value)); }
};

enum class Format { csv, json };

Format parse_format(const std::string& name);

/// CSV layout: "# key,value" metadata lines, then for every table a
/// "# table,<name>" line, the header and the rows.
void write_csv(std::ostream& out, const Report& report);
void write_json(std::ostream& out, const Report& report);
void write_report(std::ostream& out, const Report& report, Format format);

}  // namespace rfvar::cli
