#pragma once

// Minimal CSV support for the flat tables this project reads and writes
// (ids, labels, numbers — no quoting or embedded separators).

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace lesionseg {

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

inline std::string trim(const std::string& s) {
    const auto from = s.find_first_not_of(" \t\r\n");
    if (from == std::string::npos) return "";
    const auto to = s.find_last_not_of(" \t\r\n");
    return s.substr(from, to - from + 1);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) fields.push_back(trim(field));
    if (!line.empty() && line.back() == ',') fields.push_back("");
    return fields;
}

/// Reads a header + rows table; every row must have as many fields as the
/// header. Errors carry the 1-based line number.
inline CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_csv: cannot open " + path);
    CsvTable table;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        auto fields = split_csv_line(line);
        if (table.header.empty()) {
            table.header = std::move(fields);
        } else {
            if (fields.size() != table.header.size())
                throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                         ": malformed row (expected " +
                                         std::to_string(table.header.size()) + " fields, got " +
                                         std::to_string(fields.size()) + ")");
            table.rows.push_back(std::move(fields));
        }
    }
    if (table.header.empty()) throw std::runtime_error("read_csv: " + path + " is empty");
    return table;
}

class CsvWriter {
public:
    explicit CsvWriter(const std::string& path) : out_(path) {
        if (!out_) throw std::runtime_error("CsvWriter: cannot write " + path);
    }

    void row(const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i) out_ << ',';
            out_ << fields[i];
        }
        out_ << '\n';
    }

private:
    std::ofstream out_;
};

}  // namespace lesionseg
