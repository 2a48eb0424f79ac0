#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace sgfb {

struct ReportTable {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    bool operator==(const ReportTable&) const = default;
};

struct ReportSection {
    std::string name;
    std::vector<std::pair<std::string, std::string>> values;
    std::vector<ReportTable> tables;

    ReportSection& set(std::string key, std::string value);
    ReportTable& add_table(std::string table_name, std::vector<std::string> cols);
    const std::string* find(std::string_view key) const;
    const ReportTable* table(std::string_view table_name) const;

    bool operator==(const ReportSection&) const = default;
};

// Text layout, UTF-8 with LF endings:
//
//   sgfb-report v1
//
//   [section]
//   key = value
//
//   @table name
//   col<TAB>col
//   cell<TAB>cell
//   @end
//
// Names, keys, and cells may not contain tabs or newlines; keys may not
// contain " = " and must not start with '[' or '@'.
struct Report {
    std::vector<ReportSection> sections;

    ReportSection& section(std::string name);
    const ReportSection* find(std::string_view name) const;

    bool operator==(const Report&) const = default;
};

inline constexpr std::string_view kReportHeader = "sgfb-report v1";

std::string format_report(const Report& report);
// Throws ParseError (offset = byte of the offending line) on malformed text.
Report parse_report(std::string_view text);

void write_report(const Report& report, const std::filesystem::path& path);
Report read_report(const std::filesystem::path& path);

// Fixed formatting so reports are byte-stable across runs.
std::string format_ratio(double v);          // 4 decimals
std::string format_number(double v);         // shortest round-trip form
std::string format_optional(const double* v);  // "undefined" when null

}  // namespace sgfb
