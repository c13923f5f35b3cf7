#pragma once

// Deterministic text output: doubles printed with %.17g (exact value
// round-trip), LF line endings, '.' decimal separator regardless of locale.
// CSV files start with '#' comment lines carrying the version string and
// the echoed configuration, then one header row.

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "hilbert.hpp"

namespace stratreg::io {

inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string fmt(int v) { return std::to_string(v); }
inline std::string fmt(std::uint64_t v) { return std::to_string(v); }

struct CsvWriter {
    std::ofstream out;

    explicit CsvWriter(const std::string& path) : out(path, std::ios::binary) {
        if (!out) throw ConfigError("cannot open for writing: " + path);
    }

    void comment(const std::string& line) { out << "# " << line << "\n"; }
    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out << ",";
            out << cells[i];
        }
        out << "\n";
    }
};

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open for writing: " + path);
    out << content;
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open for reading: " + path);
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return content;
}

} // namespace stratreg::io
