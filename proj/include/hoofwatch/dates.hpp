#pragma once

#include <compare>
#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

#include "hoofwatch/error.hpp"

namespace hoofwatch {

// Calendar day stored as days since 1970-01-01 (proleptic Gregorian).
// Day arithmetic is plain integer arithmetic on the serial value.
struct Date {
    std::int32_t serial = 0;

    friend auto operator<=>(const Date&, const Date&) = default;

    Date operator+(int days) const { return Date{serial + days}; }
    Date operator-(int days) const { return Date{serial - days}; }
    int operator-(const Date& other) const { return serial - other.serial; }
};

namespace detail {

// Howard Hinnant's civil-date algorithms.
inline std::int32_t days_from_civil(int y, unsigned m, unsigned d) {
    y -= m <= 2;
    const int era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m > 2 ? m - 3 : m + 9) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<int>(doe) - 719468;
}

inline void civil_from_days(std::int32_t z, int& y, unsigned& m, unsigned& d) {
    z += 719468;
    const int era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const int yr = static_cast<int>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = doy - (153 * mp + 2) / 5 + 1;
    m = mp < 10 ? mp + 3 : mp - 9;
    y = yr + (m <= 2);
}

inline bool is_leap(int y) {
    return y % 4 == 0 && (y % 100 != 0 || y % 400 == 0);
}

inline unsigned days_in_month(int y, unsigned m) {
    static constexpr unsigned kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    return m == 2 && is_leap(y) ? 29 : kDays[m - 1];
}

}  // namespace detail

inline Date make_date(int year, unsigned month, unsigned day) {
    return Date{detail::days_from_civil(year, month, day)};
}

// Strict ISO-8601 calendar day: exactly "YYYY-MM-DD".
inline Date parse_date(std::string_view s, int line = 0) {
    auto fail = [&] { throw Error("bad_date", "invalid date '" + std::string(s) + "'", line); };
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') fail();
    auto digits = [&](std::size_t pos, std::size_t n) {
        int v = 0;
        for (std::size_t i = pos; i < pos + n; ++i) {
            if (s[i] < '0' || s[i] > '9') fail();
            v = v * 10 + (s[i] - '0');
        }
        return v;
    };
    int y = digits(0, 4);
    unsigned m = static_cast<unsigned>(digits(5, 2));
    unsigned d = static_cast<unsigned>(digits(8, 2));
    if (m < 1 || m > 12 || d < 1 || d > detail::days_in_month(y, m)) fail();
    return make_date(y, m, d);
}

inline std::string to_string(Date date) {
    int y;
    unsigned m, d;
    detail::civil_from_days(date.serial, y, m, d);
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", y, m, d);
    return buf;
}

}  // namespace hoofwatch
