#pragma once

#include <string>

#include "lifeseq/common.hpp"

namespace lifeseq {

// Proleptic Gregorian calendar date. Serial numbers count days from the civil
// epoch 1970-01-01 (negative before), so differences are plain integer math.
struct Date {
    int year = 1970;
    int month = 1;  // 1..12
    int day = 1;    // 1..31

    friend bool operator==(const Date&, const Date&) = default;
};

// Days since 1970-01-01 (Howard Hinnant's civil-days algorithm).
long days_from_civil(const Date& d);
Date civil_from_days(long serial);

bool is_valid_date(const Date& d);

inline bool operator<(const Date& a, const Date& b) {
    return days_from_civil(a) < days_from_civil(b);
}
inline bool operator<=(const Date& a, const Date& b) {
    return days_from_civil(a) <= days_from_civil(b);
}

// "YYYY-MM-DD"
Date parse_date(const std::string& text);
std::string format_date(const Date& d);

// Completed years from the (year, month) of birth to `at`; the birth day is
// pinned to the 1st of the month since sources carry no finer resolution.
int completed_years(int birth_year, int birth_month, const Date& at);

}  // namespace lifeseq
