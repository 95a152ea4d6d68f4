#include "bondtca/civil_time.hpp"

#include "bondtca/error.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>

namespace bondtca {

namespace {

int parse_int(std::string_view text, std::string_view what) {
    int value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw DataError("invalid " + std::string(what) + " '" + std::string(text) + "'");
    }
    return value;
}

}  // namespace

std::string IsoWeek::str() const {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-W%02u", year, week);
    return buf;
}

Date make_date(int y, unsigned m, unsigned d) {
    std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
    if (!ymd.ok()) {
        throw DataError("invalid calendar date " + std::to_string(y) + "-" + std::to_string(m) + "-" +
                        std::to_string(d));
    }
    return Date{ymd};
}

Date parse_date(std::string_view text) {
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
        throw DataError("invalid date '" + std::string(text) + "' (expected YYYY-MM-DD)");
    }
    return make_date(parse_int(text.substr(0, 4), "year"), static_cast<unsigned>(parse_int(text.substr(5, 2), "month")),
                     static_cast<unsigned>(parse_int(text.substr(8, 2), "day")));
}

std::int32_t parse_time_of_day(std::string_view text) {
    if (text.size() != 8 || text[2] != ':' || text[5] != ':') {
        throw DataError("invalid time '" + std::string(text) + "' (expected HH:MM:SS)");
    }
    const int h = parse_int(text.substr(0, 2), "hour");
    const int m = parse_int(text.substr(3, 2), "minute");
    const int s = parse_int(text.substr(6, 2), "second");
    if (h > 23 || m > 59 || s > 59) throw DataError("time out of range '" + std::string(text) + "'");
    return h * 3600 + m * 60 + s;
}

std::string format_date(Date d) {
    const std::chrono::year_month_day ymd{d};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

std::string format_time_of_day(std::int32_t seconds) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%02d:%02d:%02d", seconds / 3600, (seconds / 60) % 60, seconds % 60);
    return buf;
}

std::string format_timestamp(const Timestamp& t) {
    return format_date(t.date) + " " + format_time_of_day(t.seconds);
}

Timestamp parse_timestamp(std::string_view text) {
    if (text.size() != 19 || (text[10] != ' ' && text[10] != 'T')) {
        throw DataError("invalid timestamp '" + std::string(text) + "'");
    }
    return Timestamp{parse_date(text.substr(0, 10)), parse_time_of_day(text.substr(11, 8))};
}

bool is_weekend(Date d) {
    const unsigned iso = std::chrono::weekday{d}.iso_encoding();
    return iso >= 6;
}

IsoWeek iso_week(Date d) {
    using namespace std::chrono;
    const unsigned iso = weekday{d}.iso_encoding();
    const Date thursday = d + days{4 - static_cast<int>(iso)};
    const year y = year_month_day{thursday}.year();
    const Date jan1 = sys_days{y / January / 1};
    return IsoWeek{static_cast<int>(y), static_cast<unsigned>((thursday - jan1).count() / 7 + 1)};
}

IsoWeek parse_iso_week(std::string_view text) {
    if (text.size() != 8 || text[4] != '-' || text[5] != 'W') {
        throw DataError("invalid ISO week '" + std::string(text) + "' (expected YYYY-Www)");
    }
    IsoWeek w{parse_int(text.substr(0, 4), "ISO year"), static_cast<unsigned>(parse_int(text.substr(6, 2), "ISO week"))};
    if (w.week < 1 || w.week > 53) throw DataError("ISO week out of range '" + std::string(text) + "'");
    return w;
}

Date iso_week_monday(const IsoWeek& w) {
    using namespace std::chrono;
    const Date jan4 = sys_days{year{w.year} / January / 4};
    const unsigned iso = weekday{jan4}.iso_encoding();
    return jan4 - days{static_cast<int>(iso) - 1} + days{7 * (static_cast<int>(w.week) - 1)};
}

double years_between(Date from, Date to) {
    return static_cast<double>((to - from).count()) / 365.25;
}

BusinessCalendar BusinessCalendar::parse(std::istream& in) {
    std::set<Date> holidays;
    std::string line;
    while (std::getline(in, line)) {
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        const auto last = line.find_last_not_of(" \t\r");
        holidays.insert(parse_date(std::string_view(line).substr(first, last - first + 1)));
    }
    return BusinessCalendar(std::move(holidays));
}

BusinessCalendar BusinessCalendar::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open calendar file '" + path + "'");
    return parse(in);
}

Date BusinessCalendar::next_business_day(Date d) const {
    do {
        d += std::chrono::days{1};
    } while (!is_business_day(d));
    return d;
}

int BusinessCalendar::business_days_in_week(const IsoWeek& w) const {
    const Date monday = iso_week_monday(w);
    int n = 0;
    for (int i = 0; i < 7; ++i) n += is_business_day(monday + std::chrono::days{i}) ? 1 : 0;
    return n;
}

void BusinessCalendar::write(std::ostream& out) const {
    out << "# holidays (weekends are implicit)\n";
    for (Date d : holidays_) out << format_date(d) << '\n';
}

}  // namespace bondtca
