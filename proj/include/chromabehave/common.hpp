#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace chromabehave {

enum class ErrorCode {
  MalformedRow,
  UnknownKind,
  DuplicateUser,
  MissingColumn,
  NegativeCount,
  EmptyDictionary,
  UnknownLeaf,
  EmptyCorpus,
  DimensionMismatch,
  NonFiniteInput,
  DivergedLoss,
  ShapeMismatch,
  EmptyPool,
  SingleClass,
  SingleValue,
  LengthMismatch,
  CorruptFile,
  SingleClassTrainingSet,
  EmptyTestSet,
  ConfigInfeasible,
  TooFewItems,
  EmptyBackground,
  ModelUnavailable,
  AlreadyLabeled,
  UnknownAlert,
  PoolTooSmall,
  InvalidArgument,
  Io,
};

std::string_view to_string(ErrorCode code);

/// All recoverable failures in the library are reported through this type.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

/// Calendar date stored as days since 1970-01-01.
struct Date {
  std::int32_t days = 0;

  static Date from_ymd(int year, unsigned month, unsigned day);
  /// Accepts ISO `YYYY-MM-DD`.
  static Date parse_iso(std::string_view text);
  int year() const;
  unsigned month() const;
  unsigned day() const;
  std::string iso() const;

  Date operator+(int n) const { return Date{days + n}; }
  Date operator-(int n) const { return Date{days - n}; }
  int operator-(Date other) const { return days - other.days; }
  auto operator<=>(const Date&) const = default;
};

/// Wall-clock timestamp in the organization's local clock, seconds since epoch.
/// No timezone arithmetic is ever applied.
struct DateTime {
  std::int64_t seconds = 0;

  static DateTime from_parts(Date date, int hour, int minute, int second = 0);
  /// Parses the CERT dialect `MM/DD/YYYY HH:MM:SS` (seconds optional).
  static DateTime parse_cert(std::string_view text);
  std::string cert() const;

  Date date() const;
  /// Minutes since local midnight, including the fractional seconds part.
  double minute_of_day() const;
  auto operator<=>(const DateTime&) const = default;
};

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);

}  // namespace chromabehave
