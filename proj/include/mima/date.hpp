#pragma once

#include <compare>
#include <optional>
#include <stdexcept>
#include <string>

namespace mima {

// Calendar date, ISO-8601 text form YYYY-MM-DD.
struct Date {
  int year = 0;
  int month = 0;
  int day = 0;

  auto operator<=>(const Date&) const = default;

  static bool leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

  static int days_in_month(int y, int m) {
    static constexpr int d[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (m == 2 && leap(y)) return 29;
    return d[m - 1];
  }

  bool valid() const {
    return month >= 1 && month <= 12 && day >= 1 && day <= days_in_month(year, month);
  }

  static Date parse(const std::string& s) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') {
      throw std::invalid_argument("malformed date '" + s + "' (expected YYYY-MM-DD)");
    }
    for (int i : {0, 1, 2, 3, 5, 6, 8, 9}) {
      if (s[i] < '0' || s[i] > '9') {
        throw std::invalid_argument("malformed date '" + s + "' (expected YYYY-MM-DD)");
      }
    }
    Date d{std::stoi(s.substr(0, 4)), std::stoi(s.substr(5, 2)), std::stoi(s.substr(8, 2))};
    if (!d.valid()) throw std::invalid_argument("invalid calendar date '" + s + "'");
    return d;
  }

  std::string str() const {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", year, month, day);
    return buf;
  }
};

}  // namespace mima
