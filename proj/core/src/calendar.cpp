#include "trendlab/calendar.hpp"

#include <charconv>
#include <cstdio>

#include "trendlab/errors.hpp"

namespace trendlab {

namespace {

std::chrono::year_month_day to_ymd(std::chrono::sys_days d) {
    return std::chrono::year_month_day(d);
}

}  // namespace

Date::Date(int year, unsigned month, unsigned day_of_month) {
    std::chrono::year_month_day ymd{std::chrono::year(year), std::chrono::month(month),
                                    std::chrono::day(day_of_month)};
    if (!ymd.ok()) {
        throw ParseError("invalid calendar date");
    }
    day_ = std::chrono::sys_days(ymd);
}

std::optional<Date> Date::try_parse(std::string_view iso) {
    // Expect exactly YYYY-MM-DD.
    if (iso.size() != 10 || iso[4] != '-' || iso[7] != '-') return std::nullopt;
    int y = 0;
    unsigned m = 0, d = 0;
    auto parse_int = [](std::string_view s, auto& out) {
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
        return ec == std::errc() && ptr == s.data() + s.size();
    };
    if (!parse_int(iso.substr(0, 4), y) || !parse_int(iso.substr(5, 2), m) ||
        !parse_int(iso.substr(8, 2), d)) {
        return std::nullopt;
    }
    std::chrono::year_month_day ymd{std::chrono::year(y), std::chrono::month(m),
                                    std::chrono::day(d)};
    if (!ymd.ok()) return std::nullopt;
    return Date(std::chrono::sys_days(ymd));
}

Date Date::parse(std::string_view iso) {
    auto d = try_parse(iso);
    if (!d) {
        throw ParseError("invalid date '" + std::string(iso) + "', expected YYYY-MM-DD");
    }
    return *d;
}

std::string Date::to_string() const {
    auto ymd = to_ymd(day_);
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", int(ymd.year()), unsigned(ymd.month()),
                  unsigned(ymd.day()));
    return buf;
}

bool Date::is_weekend() const {
    std::chrono::weekday wd{day_};
    return wd == std::chrono::Saturday || wd == std::chrono::Sunday;
}

Date Date::next_weekday() const {
    Date d = plus_days(1);
    while (d.is_weekend()) d = d.plus_days(1);
    return d;
}

int Date::year() const { return int(to_ymd(day_).year()); }

unsigned Date::month() const { return unsigned(to_ymd(day_).month()); }

}  // namespace trendlab
