#pragma once

#include <istream>
#include <string>
#include <vector>

#include "hexheat/errors.hpp"

namespace hexheat::csv {

// RFC4180-style field split: quoted fields may contain commas and doubled
// quotes; embedded newlines are not supported.
inline std::vector<std::string> split_line(const std::string& line,
                                           std::size_t line_no) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"' && cur.empty()) {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (quoted) {
        throw IngestError("line " + std::to_string(line_no) +
                          ": unterminated quoted CSV field");
    }
    fields.push_back(std::move(cur));
    return fields;
}

inline std::string escape(const std::string& field) {
    if (field.find_first_of(",\"\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += '"';
    return out;
}

// Reads lines, stripping a trailing '\r' so CRLF files parse too.
inline bool read_line(std::istream& in, std::string& line) {
    if (!std::getline(in, line)) return false;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
}

} // namespace hexheat::csv
