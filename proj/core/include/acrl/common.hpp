#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace acrl {

enum class Side { Buy, Sell };

std::string_view to_string(Side side);
Side parse_side(std::string_view text);

/// Broad failure classes. The CLI maps each to a distinct exit code and
/// prints the category name so callers can branch on it.
enum class ErrorCategory {
  Io,
  Format,
  InvalidArgument,
  Data,
  Numeric,
  Config,
  MissingArtifact,
  Internal,
};

std::string_view to_string(ErrorCategory category);
int exit_code(ErrorCategory category);

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& message)
      : std::runtime_error(message), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

/// Exchange-local instant: UTC milliseconds plus the UTC offset the
/// exchange reported. Ordering uses the UTC value only.
struct Timestamp {
  std::int64_t utc_ms = 0;
  std::int32_t offset_minutes = 0;

  std::int64_t local_ms() const { return utc_ms + std::int64_t{offset_minutes} * 60'000; }
  /// Days since 1970-01-01 on the exchange-local calendar.
  std::int64_t local_day() const;
  int local_hour() const;
  /// Milliseconds since local midnight.
  std::int64_t local_time_of_day_ms() const;

  friend bool operator==(const Timestamp&, const Timestamp&) = default;
};

/// Parses ISO-8601 `YYYY-MM-DDTHH:MM:SS[.fff](Z|+HH:MM|-HH:MM|+HHMM)`.
/// A space may replace the `T`. Throws Error{Format} on malformed input.
Timestamp parse_timestamp(std::string_view text);
std::string format_timestamp(const Timestamp& ts);

/// Local calendar day <-> `YYYY-MM-DD`.
std::int64_t parse_date(std::string_view text);
std::string format_date(std::int64_t local_day);
/// 0 = Monday ... 6 = Sunday.
int weekday(std::int64_t local_day);

/// Builds a timestamp from local calendar fields.
Timestamp make_timestamp(std::int64_t local_day, std::int64_t time_of_day_ms,
                         std::int32_t offset_minutes);

}  // namespace acrl
