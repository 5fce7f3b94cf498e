#pragma once

#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace firecast {

/// Calendar day. Stored as proleptic Gregorian y/m/d, compared and
/// iterated through a days-since-epoch serial (1970-01-01 = 0).
struct Date {
    int year = 1970;
    unsigned month = 1;  // 1..12
    unsigned day = 1;    // 1..31

    Date() = default;
    Date(int y, unsigned m, unsigned d);

    /// Serial day number, 1970-01-01 = 0 (civil-from-days algorithm).
    std::int64_t serial() const;
    static Date from_serial(std::int64_t z);

    Date plus_days(std::int64_t n) const { return from_serial(serial() + n); }

    /// "YYYY-MM-DD"
    std::string iso() const;
    /// Parses "YYYY-MM-DD"; throws std::invalid_argument on anything else.
    static Date parse(const std::string& s);

    friend bool operator==(const Date& a, const Date& b) {
        return a.year == b.year && a.month == b.month && a.day == b.day;
    }
    friend std::strong_ordering operator<=>(const Date& a, const Date& b) {
        return a.serial() <=> b.serial();
    }
};

inline std::int64_t days_from_civil(int y, unsigned m, unsigned d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

inline void civil_from_days(std::int64_t z, int& y, unsigned& m, unsigned& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t yy = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = doy - (153 * mp + 2) / 5 + 1;
    m = mp + (mp < 10 ? 3 : -9);
    y = static_cast<int>(yy) + (m <= 2);
}

inline bool is_leap(int y) {
    return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
}

inline unsigned days_in_month(int y, unsigned m) {
    static constexpr unsigned lens[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (m == 2 && is_leap(y)) return 29;
    return lens[m - 1];
}

inline Date::Date(int y, unsigned m, unsigned d) : year(y), month(m), day(d) {
    if (m < 1 || m > 12 || d < 1 || d > days_in_month(y, m))
        throw std::invalid_argument("invalid calendar day " + std::to_string(y) + "-" +
                                    std::to_string(m) + "-" + std::to_string(d));
}

inline std::int64_t Date::serial() const { return days_from_civil(year, month, day); }

inline Date Date::from_serial(std::int64_t z) {
    Date r;
    civil_from_days(z, r.year, r.month, r.day);
    return r;
}

inline std::string Date::iso() const {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", year, month, day);
    return buf;
}

inline Date Date::parse(const std::string& s) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-')
        throw std::invalid_argument("expected YYYY-MM-DD date, got '" + s + "'");
    for (size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u})
        if (s[i] < '0' || s[i] > '9')
            throw std::invalid_argument("expected YYYY-MM-DD date, got '" + s + "'");
    int y = std::stoi(s.substr(0, 4));
    unsigned m = static_cast<unsigned>(std::stoi(s.substr(5, 2)));
    unsigned d = static_cast<unsigned>(std::stoi(s.substr(8, 2)));
    return Date(y, m, d);  // range-checks
}

}  // namespace firecast
