#include "derail/timeutil.hpp"

#include <cctype>
#include <cstdio>

#include "derail/error.hpp"

namespace derail {
namespace {

int read_digits(std::string_view text, std::size_t pos, std::size_t count) {
  if (pos + count > text.size()) {
    throw Error(Errc::InvalidArgument, "truncated timestamp: " + std::string(text));
  }
  int value = 0;
  for (std::size_t i = pos; i < pos + count; ++i) {
    if (!std::isdigit(static_cast<unsigned char>(text[i]))) {
      throw Error(Errc::InvalidArgument, "bad digit in timestamp: " + std::string(text));
    }
    value = value * 10 + (text[i] - '0');
  }
  return value;
}

void expect(std::string_view text, std::size_t pos, char c) {
  if (pos >= text.size() || text[pos] != c) {
    throw Error(Errc::InvalidArgument, "malformed timestamp: " + std::string(text));
  }
}

}  // namespace

Timestamp parse_iso8601(std::string_view text) {
  using namespace std::chrono;
  int y = read_digits(text, 0, 4);
  expect(text, 4, '-');
  int mo = read_digits(text, 5, 2);
  expect(text, 7, '-');
  int d = read_digits(text, 8, 2);
  if (text.size() < 11 || (text[10] != 'T' && text[10] != 't' && text[10] != ' ')) {
    throw Error(Errc::InvalidArgument, "malformed timestamp: " + std::string(text));
  }
  int h = read_digits(text, 11, 2);
  expect(text, 13, ':');
  int mi = read_digits(text, 14, 2);
  expect(text, 16, ':');
  int s = read_digits(text, 17, 2);

  year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || s > 60) {
    throw Error(Errc::InvalidArgument, "out-of-range timestamp: " + std::string(text));
  }

  std::size_t pos = 19;
  if (pos < text.size() && text[pos] == '.') {
    ++pos;
    while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
  }
  Seconds offset{0};
  if (pos == text.size()) {
    // no zone designator: taken as UTC
  } else if (text[pos] == 'Z' || text[pos] == 'z') {
    ++pos;
  } else if (text[pos] == '+' || text[pos] == '-') {
    int sign = text[pos] == '-' ? -1 : 1;
    int oh = read_digits(text, pos + 1, 2);
    std::size_t mpos = pos + 3;
    if (mpos < text.size() && text[mpos] == ':') ++mpos;
    int om = read_digits(text, mpos, 2);
    offset = sign * (hours{oh} + minutes{om});
    pos = mpos + 2;
  }
  if (pos != text.size()) {
    throw Error(Errc::InvalidArgument, "trailing characters in timestamp: " + std::string(text));
  }
  return sys_days{ymd} + hours{h} + minutes{mi} + Seconds{s} - offset;
}

std::string format_iso8601(Timestamp t) {
  using namespace std::chrono;
  auto day_point = floor<days>(t);
  year_month_day ymd{day_point};
  hh_mm_ss hms{t - day_point};
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02ld:%02ld:%02lldZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<long>(hms.hours().count()), static_cast<long>(hms.minutes().count()),
                static_cast<long long>(hms.seconds().count()));
  return buf;
}

Clock system_clock() {
  return [] { return std::chrono::floor<Seconds>(std::chrono::system_clock::now()); };
}

Clock fixed_clock(Timestamp t) {
  return [t] { return t; };
}

}  // namespace derail
