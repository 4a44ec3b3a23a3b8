#include "acrl/common.hpp"

#include <charconv>
#include <chrono>

#include <fmt/format.h>

namespace acrl {

namespace {

constexpr std::int64_t kMsPerDay = 86'400'000;

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

int read_digits(std::string_view text, std::size_t pos, std::size_t count) {
  if (pos + count > text.size()) {
    throw Error(ErrorCategory::Format, fmt::format("truncated timestamp '{}'", text));
  }
  int value = 0;
  auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + pos + count, value);
  if (ec != std::errc{} || ptr != text.data() + pos + count) {
    throw Error(ErrorCategory::Format, fmt::format("bad digits in '{}'", text));
  }
  return value;
}

void expect_char(std::string_view text, std::size_t pos, std::string_view allowed) {
  if (pos >= text.size() || allowed.find(text[pos]) == std::string_view::npos) {
    throw Error(ErrorCategory::Format, fmt::format("malformed timestamp '{}'", text));
  }
}

std::int64_t days_from_civil(int y, int m, int d, std::string_view source) {
  using namespace std::chrono;
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(m)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) {
    throw Error(ErrorCategory::Format, fmt::format("invalid calendar date in '{}'", source));
  }
  return sys_days{ymd}.time_since_epoch().count();
}

}  // namespace

std::string_view to_string(Side side) { return side == Side::Buy ? "BUY" : "SELL"; }

Side parse_side(std::string_view text) {
  if (text == "BUY" || text == "buy") return Side::Buy;
  if (text == "SELL" || text == "sell") return Side::Sell;
  throw Error(ErrorCategory::Config, fmt::format("unknown side '{}'", text));
}

std::string_view to_string(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::Io: return "io";
    case ErrorCategory::Format: return "format";
    case ErrorCategory::InvalidArgument: return "invalid_argument";
    case ErrorCategory::Data: return "data";
    case ErrorCategory::Numeric: return "numeric";
    case ErrorCategory::Config: return "config";
    case ErrorCategory::MissingArtifact: return "missing_artifact";
    case ErrorCategory::Internal: return "internal";
  }
  return "unknown";
}

int exit_code(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::Io: return 2;
    case ErrorCategory::Format: return 3;
    case ErrorCategory::InvalidArgument: return 4;
    case ErrorCategory::Data: return 5;
    case ErrorCategory::Numeric: return 6;
    case ErrorCategory::Config: return 7;
    case ErrorCategory::MissingArtifact: return 8;
    case ErrorCategory::Internal: return 9;
  }
  return 1;
}

std::int64_t Timestamp::local_day() const { return floor_div(local_ms(), kMsPerDay); }

std::int64_t Timestamp::local_time_of_day_ms() const {
  return local_ms() - local_day() * kMsPerDay;
}

int Timestamp::local_hour() const {
  return static_cast<int>(local_time_of_day_ms() / 3'600'000);
}

Timestamp parse_timestamp(std::string_view text) {
  // 2012-01-03T09:00:01.250+02:00
  const int y = read_digits(text, 0, 4);
  expect_char(text, 4, "-");
  const int mo = read_digits(text, 5, 2);
  expect_char(text, 7, "-");
  const int d = read_digits(text, 8, 2);
  expect_char(text, 10, "T ");
  const int hh = read_digits(text, 11, 2);
  expect_char(text, 13, ":");
  const int mm = read_digits(text, 14, 2);
  expect_char(text, 16, ":");
  const int ss = read_digits(text, 17, 2);
  if (hh > 23 || mm > 59 || ss > 60) {
    throw Error(ErrorCategory::Format, fmt::format("time out of range in '{}'", text));
  }

  std::size_t pos = 19;
  std::int64_t millis = 0;
  if (pos < text.size() && text[pos] == '.') {
    ++pos;
    std::int64_t scale = 100;
    std::size_t digits = 0;
    while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') {
      millis += scale * (text[pos] - '0');
      scale /= 10;
      ++pos;
      ++digits;
    }
    if (digits == 0) throw Error(ErrorCategory::Format, fmt::format("empty fraction in '{}'", text));
  }

  std::int32_t offset = 0;
  if (pos >= text.size()) {
    throw Error(ErrorCategory::Format, fmt::format("timestamp '{}' lacks a timezone", text));
  }
  if (text[pos] == 'Z') {
    ++pos;
  } else {
    expect_char(text, pos, "+-");
    const int sign = text[pos] == '-' ? -1 : 1;
    const int oh = read_digits(text, pos + 1, 2);
    std::size_t mpos = pos + 3;
    if (mpos < text.size() && text[mpos] == ':') ++mpos;
    const int om = read_digits(text, mpos, 2);
    offset = sign * (oh * 60 + om);
    pos = mpos + 2;
  }
  if (pos != text.size()) {
    throw Error(ErrorCategory::Format, fmt::format("trailing characters in '{}'", text));
  }

  const std::int64_t day = days_from_civil(y, mo, d, text);
  const std::int64_t tod = ((hh * 60LL + mm) * 60LL + ss) * 1000LL + millis;
  return make_timestamp(day, tod, offset);
}

Timestamp make_timestamp(std::int64_t local_day, std::int64_t time_of_day_ms,
                         std::int32_t offset_minutes) {
  Timestamp ts;
  ts.offset_minutes = offset_minutes;
  ts.utc_ms = local_day * kMsPerDay + time_of_day_ms - std::int64_t{offset_minutes} * 60'000;
  return ts;
}

std::string format_timestamp(const Timestamp& ts) {
  const std::int64_t tod = ts.local_time_of_day_ms();
  const std::int64_t ms = tod % 1000;
  const std::int64_t secs = tod / 1000;
  const int off = ts.offset_minutes < 0 ? -ts.offset_minutes : ts.offset_minutes;
  return fmt::format("{}T{:02}:{:02}:{:02}.{:03}{}{:02}:{:02}", format_date(ts.local_day()),
                     secs / 3600, (secs / 60) % 60, secs % 60, ms,
                     ts.offset_minutes < 0 ? '-' : '+', off / 60, off % 60);
}

std::int64_t parse_date(std::string_view text) {
  if (text.size() != 10) throw Error(ErrorCategory::Format, fmt::format("bad date '{}'", text));
  const int y = read_digits(text, 0, 4);
  expect_char(text, 4, "-");
  const int m = read_digits(text, 5, 2);
  expect_char(text, 7, "-");
  const int d = read_digits(text, 8, 2);
  return days_from_civil(y, m, d, text);
}

std::string format_date(std::int64_t local_day) {
  using namespace std::chrono;
  const year_month_day ymd{sys_days{days{local_day}}};
  return fmt::format("{:04}-{:02}-{:02}", static_cast<int>(ymd.year()),
                     static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
}

int weekday(std::int64_t local_day) {
  using namespace std::chrono;
  const std::chrono::weekday wd{sys_days{days{local_day}}};
  return static_cast<int>(wd.iso_encoding()) - 1;
}

}  // namespace acrl
