#include "sgfb/report.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <span>

#include "sgfb/dataset.hpp"
#include "sgfb/error.hpp"

namespace sgfb {

namespace {

bool has_control(std::string_view s) {
    return s.find_first_of("\t\n\r") != std::string_view::npos;
}

void check_field(std::string_view s, const char* what) {
    if (has_control(s)) {
        throw ParameterError(std::string("report ") + what + " contains a tab or newline: " + std::string(s));
    }
}

std::vector<std::string> split_tabs(std::string_view line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t tab = line.find('\t', start);
        out.emplace_back(line.substr(start, tab - start));
        if (tab == std::string_view::npos) {
            break;
        }
        start = tab + 1;
    }
    return out;
}

std::string join_tabs(const std::vector<std::string>& cells) {
    std::string out;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i > 0) {
            out += '\t';
        }
        out += cells[i];
    }
    return out;
}

}  // namespace

ReportSection& ReportSection::set(std::string key, std::string value) {
    for (auto& kv : values) {
        if (kv.first == key) {
            kv.second = std::move(value);
            return *this;
        }
    }
    values.emplace_back(std::move(key), std::move(value));
    return *this;
}

ReportTable& ReportSection::add_table(std::string table_name, std::vector<std::string> cols) {
    tables.push_back(ReportTable{std::move(table_name), std::move(cols), {}});
    return tables.back();
}

const std::string* ReportSection::find(std::string_view key) const {
    for (const auto& kv : values) {
        if (kv.first == key) {
            return &kv.second;
        }
    }
    return nullptr;
}

const ReportTable* ReportSection::table(std::string_view table_name) const {
    for (const ReportTable& t : tables) {
        if (t.name == table_name) {
            return &t;
        }
    }
    return nullptr;
}

ReportSection& Report::section(std::string name) {
    for (ReportSection& s : sections) {
        if (s.name == name) {
            return s;
        }
    }
    sections.push_back(ReportSection{std::move(name), {}, {}});
    return sections.back();
}

const ReportSection* Report::find(std::string_view name) const {
    for (const ReportSection& s : sections) {
        if (s.name == name) {
            return &s;
        }
    }
    return nullptr;
}

std::string format_report(const Report& report) {
    std::string out(kReportHeader);
    out += '\n';
    for (const ReportSection& s : report.sections) {
        check_field(s.name, "section name");
        if (s.name.empty() || s.name.find(']') != std::string::npos) {
            throw ParameterError("report section name must be non-empty and free of ']'");
        }
        out += "\n[" + s.name + "]\n";
        for (const auto& [key, value] : s.values) {
            check_field(key, "key");
            check_field(value, "value");
            if (key.empty() || key.front() == '[' || key.front() == '@' || key.find(" = ") != std::string::npos ||
                key.back() == ' ' || key.front() == ' ') {
                throw ParameterError("report key is not representable: " + key);
            }
            out += key + " = " + value + "\n";
        }
        for (const ReportTable& t : s.tables) {
            check_field(t.name, "table name");
            if (t.columns.empty()) {
                throw ParameterError("report table " + t.name + " has no columns");
            }
            for (const std::string& c : t.columns) {
                check_field(c, "column");
            }
            out += "\n@table " + t.name + "\n" + join_tabs(t.columns) + "\n";
            for (const auto& row : t.rows) {
                if (row.size() != t.columns.size()) {
                    throw ParameterError("report table " + t.name + " row width disagrees with its header");
                }
                for (const std::string& c : row) {
                    check_field(c, "cell");
                }
                if (row.size() == 1 && row.front() == "@end") {
                    throw ParameterError("report table cell may not be the terminator @end");
                }
                out += join_tabs(row) + "\n";
            }
            out += "@end\n";
        }
    }
    return out;
}

Report parse_report(std::string_view text) {
    Report report;
    std::size_t pos = 0;
    std::size_t line_start = 0;
    auto next_line = [&](std::string_view& line) {
        if (pos >= text.size()) {
            return false;
        }
        line_start = pos;
        const std::size_t nl = text.find('\n', pos);
        if (nl == std::string_view::npos) {
            throw ParseError("report line not terminated by a newline", pos);
        }
        line = text.substr(pos, nl - pos);
        pos = nl + 1;
        return true;
    };

    std::string_view line;
    if (!next_line(line) || line != kReportHeader) {
        throw ParseError("missing report header \"" + std::string(kReportHeader) + "\"", 0);
    }
    ReportSection* current = nullptr;
    while (next_line(line)) {
        if (line.empty()) {
            continue;
        }
        if (line.find('\r') != std::string_view::npos) {
            throw ParseError("carriage return in report", line_start);
        }
        if (line.front() == '[') {
            if (line.size() < 3 || line.back() != ']') {
                throw ParseError("malformed section header", line_start);
            }
            report.sections.push_back(ReportSection{std::string(line.substr(1, line.size() - 2)), {}, {}});
            current = &report.sections.back();
            continue;
        }
        if (current == nullptr) {
            throw ParseError("content before the first section", line_start);
        }
        if (line.starts_with("@table ")) {
            ReportTable t;
            t.name = std::string(line.substr(7));
            if (!next_line(line) || line.empty() || line == "@end") {
                throw ParseError("table " + t.name + " lacks a column header", line_start);
            }
            t.columns = split_tabs(line);
            bool closed = false;
            while (next_line(line)) {
                if (line == "@end") {
                    closed = true;
                    break;
                }
                auto cells = split_tabs(line);
                if (cells.size() != t.columns.size()) {
                    throw ParseError("table " + t.name + " row has " + std::to_string(cells.size()) +
                                         " cells, header has " + std::to_string(t.columns.size()),
                                     line_start);
                }
                t.rows.push_back(std::move(cells));
            }
            if (!closed) {
                throw ParseError("table " + t.name + " not closed by @end", text.size());
            }
            current->tables.push_back(std::move(t));
            continue;
        }
        if (!current->tables.empty()) {
            throw ParseError("key/value line after a table", line_start);
        }
        const std::size_t eq = line.find(" = ");
        if (eq == std::string_view::npos || eq == 0) {
            throw ParseError("expected 'key = value'", line_start);
        }
        current->values.emplace_back(std::string(line.substr(0, eq)), std::string(line.substr(eq + 3)));
    }
    return report;
}

void write_report(const Report& report, const std::filesystem::path& path) {
    const std::string text = format_report(report);
    write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

Report read_report(const std::filesystem::path& path) {
    const std::vector<std::uint8_t> bytes = read_file(path);
    return parse_report(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

std::string format_ratio(double v) {
    if (!std::isfinite(v)) {
        return "nan";
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

std::string format_number(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string format_optional(const double* v) {
    return v == nullptr ? "undefined" : format_ratio(*v);
}

}  // namespace sgfb
