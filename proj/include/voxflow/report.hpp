#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "voxflow/error.hpp"

// Structured reports with stable field ordering: re-emitting the same report
// is bit-identical. Text format is a flat `key = value` list plus table
// blocks; the comma-separated format emits the tables with header rows.

namespace voxflow {

// Shortest-exact formatting would do, but %.17g round-trips doubles exactly
// and is deterministic across runs.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct Report {
  struct Table {
    std::string name;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
  };

  std::vector<std::pair<std::string, std::string>> scalars;
  std::vector<Table> tables;

  void put(const std::string& key, const std::string& value) { scalars.emplace_back(key, value); }
  void put(const std::string& key, const char* value) { scalars.emplace_back(key, value); }
  void put(const std::string& key, double value) { scalars.emplace_back(key, format_double(value)); }
  void put(const std::string& key, std::int64_t value) {
    scalars.emplace_back(key, std::to_string(value));
  }
  void put(const std::string& key, int value) { put(key, std::int64_t(value)); }

  const std::string* find(const std::string& key) const {
    for (const auto& [k, v] : scalars)
      if (k == key) return &v;
    return nullptr;
  }

  Table& add_table(std::string name, std::vector<std::string> header) {
    tables.push_back({std::move(name), std::move(header), {}});
    return tables.back();
  }
};

enum class ReportFormat { Text, Csv };

inline ReportFormat report_format_from_name(const std::string& name) {
  if (name == "text") return ReportFormat::Text;
  if (name == "csv") return ReportFormat::Csv;
  throw InvalidInput("unknown report format: " + name);
}

namespace detail {

inline void render_csv_table(std::string& out, const Report::Table& t) {
  for (std::size_t c = 0; c < t.header.size(); ++c) {
    if (c) out += ',';
    out += t.header[c];
  }
  out += '\n';
  for (const auto& row : t.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out += ',';
      out += row[c];
    }
    out += '\n';
  }
}

}  // namespace detail

inline std::string render_report(const Report& report, ReportFormat format) {
  std::string out;
  if (format == ReportFormat::Text) {
    for (const auto& [key, value] : report.scalars) {
      out += key;
      out += " = ";
      out += value;
      out += '\n';
    }
    for (const auto& table : report.tables) {
      out += "[table ";
      out += table.name;
      out += "]\n";
      detail::render_csv_table(out, table);
      out += "[/table]\n";
    }
  } else {
    for (std::size_t i = 0; i < report.tables.size(); ++i) {
      if (i) out += '\n';
      detail::render_csv_table(out, report.tables[i]);
    }
  }
  return out;
}

inline void emit_report(const Report& report, ReportFormat format, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write report: " + path);
  const std::string text = render_report(report, format);
  out.write(text.data(), std::streamsize(text.size()));
  if (!out) throw Error("short write to report: " + path);
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (char c : s) {
    h ^= std::uint8_t(c);
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[19];
  std::snprintf(buf, sizeof(buf), "0x%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace voxflow
