#include "report.hpp"

#include <ostream>

#include <json.hpp>

#include "rfvar/errors.hpp"
#include "rfvar/field_io.hpp"

namespace rfvar::cli {

namespace {

std::string csv_escape(const std::string& text) {
  if (text.find_first_of(",\"\n") == std::string::npos) return text;
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string cell_text(const Cell& cell) {
  if (const auto* s = std::get_if<std::string>(&cell)) return csv_escape(*s);
  return format_real(std::get<double>(cell));
}

}  // namespace

Format parse_format(const std::string& name) {
  if (name == "csv") return Format::csv;
  if (name == "json") return Format::json;
  throw PreconditionError("--format must be csv or json, got '" + name + "'");
}

void write_csv(std::ostream& out, const Report& report) {
  out << "# command," << report.command << '\n';
  for (const auto& [key, value] : report.metadata) out << "# " << key << ',' << csv_escape(value) << '\n';
  for (const Table& table : report.tables) {
    out << "# table," << table.name << '\n';
    for (std::size_t c = 0; c < table.columns.size(); ++c) out << (c ? "," : "") << csv_escape(table.columns[c]);
    out << '\n';
    for (const auto& row : table.rows) {
      for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << cell_text(row[c]);
      out << '\n';
    }
  }
}

void write_json(std::ostream& out, const Report& report) {
  nlohmann::ordered_json doc;
  doc["command"] = report.command;
  doc["metadata"] = nlohmann::ordered_json::object();
  for (const auto& [key, value] : report.metadata) doc["metadata"][key] = value;
  doc["tables"] = nlohmann::ordered_json::array();
  for (const Table& table : report.tables) {
    nlohmann::ordered_json t;
    t["name"] = table.name;
    t["columns"] = table.columns;
    t["rows"] = nlohmann::ordered_json::array();
    for (const auto& row : table.rows) {
      nlohmann::ordered_json r = nlohmann::ordered_json::array();
      for (const Cell& cell : row) {
        if (const auto* s = std::get_if<std::string>(&cell)) {
          r.push_back(*s);
        } else {
          r.push_back(std::get<double>(cell));
        }
      }
      t["rows"].push_back(std::move(r));
    }
    doc["tables"].push_back(std::move(t));
  }
  out << doc.dump(2) << '\n';
}

void write_report(std::ostream& out, const Report& report, Format format) {
  if (format == Format::json) {
    write_json(out, report);
  } else {
    write_csv(out, report);
  }
}

}  // namespace rfvar::cli
