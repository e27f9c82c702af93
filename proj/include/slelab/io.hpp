#pragma once

// CSV tables, flat key=value files, and the metadata sidecar written next to
// every experiment output.

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sle::io {

/// Shortest round-trip representation; output is byte-stable across runs.
inline std::string fmt_double(double x) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
    if (ec != std::errc{}) throw std::runtime_error("fmt_double: conversion failed");
    return std::string(buf, end);
}

class CsvTable {
public:
    CsvTable() = default;
    explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

    const std::vector<std::string>& header() const noexcept { return header_; }
    const std::vector<std::vector<std::string>>& rows() const noexcept { return rows_; }
    std::size_t size() const noexcept { return rows_.size(); }

    void add_row(std::vector<std::string> row) {
        if (row.size() != header_.size())
            throw std::invalid_argument("CsvTable: row width does not match header");
        rows_.push_back(std::move(row));
    }

    template <class... Ts>
    void add(const Ts&... cells) {
        std::vector<std::string> row;
        row.reserve(sizeof...(Ts));
        (row.push_back(cell(cells)), ...);
        add_row(std::move(row));
    }

    std::size_t column(std::string_view name) const {
        for (std::size_t i = 0; i < header_.size(); ++i)
            if (header_[i] == name) return i;
        throw std::out_of_range("CsvTable: no column '" + std::string(name) + "'");
    }

    double number(std::size_t row, std::size_t col) const {
        const std::string& s = rows_.at(row).at(col);
        double v = 0.0;
        auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || p != s.data() + s.size())
            throw std::invalid_argument("CsvTable: not a number: '" + s + "'");
        return v;
    }

    std::string str() const {
        std::ostringstream out;
        write_line(out, header_);
        for (const auto& r : rows_) write_line(out, r);
        return out.str();
    }

    void save(const std::string& path) const {
        std::ofstream f(path, std::ios::binary);
        if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
        f << str();
    }

    static CsvTable parse(std::istream& in) {
        std::string line;
        if (!std::getline(in, line)) throw std::invalid_argument("CSV: missing header row");
        CsvTable t(split(strip_cr(line)));
        for (const auto& h : t.header_)
            if (h.empty() || is_numeric(h)) throw std::invalid_argument("CSV: header row required");
        while (std::getline(in, line)) {
            line = strip_cr(line);
            if (line.empty()) continue;
            t.add_row(split(line));
        }
        return t;
    }

    static CsvTable load(const std::string& path) {
        std::ifstream f(path);
        if (!f) throw std::runtime_error("cannot open '" + path + "'");
        return parse(f);
    }

private:
    static std::string cell(double x) { return fmt_double(x); }
    static std::string cell(int x) { return std::to_string(x); }
    static std::string cell(long x) { return std::to_string(x); }
    static std::string cell(long long x) { return std::to_string(x); }
    static std::string cell(unsigned long x) { return std::to_string(x); }
    static std::string cell(unsigned long long x) { return std::to_string(x); }
    static std::string cell(bool x) { return x ? "1" : "0"; }
    static std::string cell(const std::string& s) { return s; }
    static std::string cell(const char* s) { return s; }

    static void write_line(std::ostream& out, const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out << ',';
            out << cells[i];
        }
        out << '\n';
    }
    static std::string strip_cr(std::string s) {
        if (!s.empty() && s.back() == '\r') s.pop_back();
        return s;
    }
    static std::vector<std::string> split(const std::string& line) {
        std::vector<std::string> out;
        std::string cur;
        for (char c : line) {
            if (c == ',') {
                out.push_back(trim(cur));
                cur.clear();
            } else {
                cur += c;
            }
        }
        out.push_back(trim(cur));
        return out;
    }
    static std::string trim(const std::string& s) {
        const auto b = s.find_first_not_of(" \t");
        if (b == std::string::npos) return {};
        const auto e = s.find_last_not_of(" \t");
        return s.substr(b, e - b + 1);
    }
    static bool is_numeric(const std::string& s) {
        double v;
        auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        return ec == std::errc{} && p == s.data() + s.size();
    }

    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

/// Flat key=value text: one pair per line, '#' starts a comment.
using KeyValues = std::map<std::string, std::string>;

inline KeyValues parse_key_values(std::istream& in) {
    KeyValues kv;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("key=value: missing '=' on line " + std::to_string(lineno));
        auto key = line.substr(0, eq);
        auto val = line.substr(eq + 1);
        auto trim = [](std::string& s) {
            const auto first = s.find_first_not_of(" \t\r");
            const auto last = s.find_last_not_of(" \t\r");
            s = first == std::string::npos ? std::string{} : s.substr(first, last - first + 1);
        };
        trim(key);
        trim(val);
        if (key.empty()) throw std::invalid_argument("key=value: empty key on line " + std::to_string(lineno));
        kv[key] = val;
    }
    return kv;
}

inline KeyValues load_key_values(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open '" + path + "'");
    return parse_key_values(f);
}

inline std::string format_key_values(const KeyValues& kv) {
    std::string out;
    for (const auto& [k, v] : kv) out += k + "=" + v + "\n";
    return out;
}

inline void save_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
    f << text;
}

} // namespace sle::io
