#pragma once

// Exchange-local wall-clock dates and times. No time-zone arithmetic is done
// anywhere in the engine.

#include <chrono>
#include <compare>
#include <cstdint>
#include <istream>
#include <set>
#include <string>
#include <string_view>

namespace bondtca {

using Date = std::chrono::sys_days;

struct Timestamp {
    Date date{};
    std::int32_t seconds = 0;  // since local midnight

    /// Seconds since 1970-01-01 00:00 local.
    std::int64_t epoch_seconds() const noexcept {
        return static_cast<std::int64_t>(date.time_since_epoch().count()) * 86400 + seconds;
    }
    friend auto operator<=>(const Timestamp&, const Timestamp&) = default;
};

struct IsoWeek {
    int year = 0;
    unsigned week = 0;  // 1..53

    int key() const noexcept { return year * 100 + static_cast<int>(week); }
    std::string str() const;  // "2015-W07"
    friend auto operator<=>(const IsoWeek&, const IsoWeek&) = default;
};

Date make_date(int y, unsigned m, unsigned d);
Date parse_date(std::string_view text);             // YYYY-MM-DD
std::int32_t parse_time_of_day(std::string_view text);  // HH:MM:SS
std::string format_date(Date d);
std::string format_time_of_day(std::int32_t seconds);
std::string format_timestamp(const Timestamp& t);  // "YYYY-MM-DD HH:MM:SS"
Timestamp parse_timestamp(std::string_view text);

bool is_weekend(Date d);
IsoWeek iso_week(Date d);
IsoWeek parse_iso_week(std::string_view text);  // "2015-W07"
Date iso_week_monday(const IsoWeek& w);

/// Year fraction on an actual/365.25 basis.
double years_between(Date from, Date to);

/// Weekends are never business days; holidays come from a file.
class BusinessCalendar {
public:
    BusinessCalendar() = default;
    explicit BusinessCalendar(std::set<Date> holidays) : holidays_(std::move(holidays)) {}

    /// One YYYY-MM-DD per line; blank lines and '#' comments are ignored.
    static BusinessCalendar parse(std::istream& in);
    static BusinessCalendar load(const std::string& path);

    bool is_business_day(Date d) const { return !is_weekend(d) && !holidays_.contains(d); }
    Date next_business_day(Date d) const;
    /// Business days in the Monday..Sunday span of an ISO week.
    int business_days_in_week(const IsoWeek& w) const;
    const std::set<Date>& holidays() const noexcept { return holidays_; }

    void write(std::ostream& out) const;

private:
    std::set<Date> holidays_;
};

}  // namespace bondtca
