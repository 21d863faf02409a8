#pragma once

#include <charconv>
#include <string>
#include <string_view>
#include <vector>

#include "hoofwatch/error.hpp"

namespace hoofwatch::csv {

// The three herd schemas never quote or embed commas, so a plain split is the
// whole dialect. Trailing '\r' is tolerated for CRLF input.
inline std::vector<std::string_view> split_line(std::string_view line) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return fields;
}

inline double parse_double(std::string_view field, int line) {
    double value = 0;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last || field.empty())
        throw Error("malformed_row", "cannot parse number '" + std::string(field) + "'", line);
    return value;
}

inline long parse_int(std::string_view field, int line) {
    long value = 0;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last || field.empty())
        throw Error("malformed_row", "cannot parse integer '" + std::string(field) + "'", line);
    return value;
}

// Shortest representation that round-trips the exact double. This is the
// canonical number format for every CSV the toolkit writes.
inline std::string format_double(double value) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    (void)ec;
    return std::string(buf, ptr);
}

}  // namespace hoofwatch::csv
