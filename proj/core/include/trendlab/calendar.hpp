#pragma once

#include <chrono>
#include <compare>
#include <optional>
#include <string>
#include <string_view>

namespace trendlab {

// Calendar date (no intraday time). Stored as days since the Unix epoch;
// parses and prints ISO-8601 (YYYY-MM-DD).
class Date {
public:
    Date() = default;
    explicit Date(std::chrono::sys_days day) : day_(day) {}
    Date(int year, unsigned month, unsigned day_of_month);

    static Date parse(std::string_view iso);  // throws ParseError
    static std::optional<Date> try_parse(std::string_view iso);

    std::string to_string() const;

    std::chrono::sys_days sys() const { return day_; }
    bool is_weekend() const;
    Date next_weekday() const;  // strictly after *this
    Date plus_days(int n) const { return Date(day_ + std::chrono::days(n)); }

    // Signed whole days from *this to other.
    int days_until(const Date& other) const {
        return static_cast<int>((other.day_ - day_).count());
    }

    int year() const;
    unsigned month() const;

    friend auto operator<=>(const Date&, const Date&) = default;

private:
    std::chrono::sys_days day_{};
};

}  // namespace trendlab
