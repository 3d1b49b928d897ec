#include "chromabehave/common.hpp"

#include <cctype>
#include <charconv>
#include <chrono>
#include <cstdio>

namespace chromabehave {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedRow: return "MalformedRow";
    case ErrorCode::UnknownKind: return "UnknownKind";
    case ErrorCode::DuplicateUser: return "DuplicateUser";
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::NegativeCount: return "NegativeCount";
    case ErrorCode::EmptyDictionary: return "EmptyDictionary";
    case ErrorCode::UnknownLeaf: return "UnknownLeaf";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::DivergedLoss: return "DivergedLoss";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::EmptyPool: return "EmptyPool";
    case ErrorCode::SingleClass: return "SingleClass";
    case ErrorCode::SingleValue: return "SingleValue";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::CorruptFile: return "CorruptFile";
    case ErrorCode::SingleClassTrainingSet: return "SingleClassTrainingSet";
    case ErrorCode::EmptyTestSet: return "EmptyTestSet";
    case ErrorCode::ConfigInfeasible: return "ConfigInfeasible";
    case ErrorCode::TooFewItems: return "TooFewItems";
    case ErrorCode::EmptyBackground: return "EmptyBackground";
    case ErrorCode::ModelUnavailable: return "ModelUnavailable";
    case ErrorCode::AlreadyLabeled: return "AlreadyLabeled";
    case ErrorCode::UnknownAlert: return "UnknownAlert";
    case ErrorCode::PoolTooSmall: return "PoolTooSmall";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

namespace {

bool parse_int(std::string_view s, int& out) {
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

std::chrono::year_month_day ymd_of(Date d) {
  return std::chrono::year_month_day{std::chrono::sys_days{std::chrono::days{d.days}}};
}

}  // namespace

Date Date::from_ymd(int year, unsigned month, unsigned day) {
  std::chrono::year_month_day ymd{std::chrono::year{year}, std::chrono::month{month},
                                  std::chrono::day{day}};
  if (!ymd.ok()) fail(ErrorCode::InvalidArgument, "invalid calendar date");
  return Date{static_cast<std::int32_t>(std::chrono::sys_days{ymd}.time_since_epoch().count())};
}

Date Date::parse_iso(std::string_view text) {
  int y = 0, m = 0, d = 0;
  if (text.size() != 10 || text[4] != '-' || text[7] != '-' || !parse_int(text.substr(0, 4), y) ||
      !parse_int(text.substr(5, 2), m) || !parse_int(text.substr(8, 2), d) || m < 1 || d < 1) {
    fail(ErrorCode::InvalidArgument, "bad ISO date '" + std::string(text) + "'");
  }
  return from_ymd(y, static_cast<unsigned>(m), static_cast<unsigned>(d));
}

int Date::year() const { return static_cast<int>(ymd_of(*this).year()); }
unsigned Date::month() const { return static_cast<unsigned>(ymd_of(*this).month()); }
unsigned Date::day() const { return static_cast<unsigned>(ymd_of(*this).day()); }

std::string Date::iso() const {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", year(), month(), day());
  return buf;
}

DateTime DateTime::from_parts(Date date, int hour, int minute, int second) {
  return DateTime{static_cast<std::int64_t>(date.days) * 86400 + hour * 3600 + minute * 60 + second};
}

DateTime DateTime::parse_cert(std::string_view text) {
  // MM/DD/YYYY HH:MM[:SS]
  auto bad = [&] { fail(ErrorCode::MalformedRow, "bad timestamp '" + std::string(text) + "'"); };
  if (text.size() < 16 || text[2] != '/' || text[5] != '/' || text[10] != ' ' || text[13] != ':') bad();
  int mo = 0, d = 0, y = 0, h = 0, mi = 0, s = 0;
  if (!parse_int(text.substr(0, 2), mo) || !parse_int(text.substr(3, 2), d) ||
      !parse_int(text.substr(6, 4), y) || !parse_int(text.substr(11, 2), h) ||
      !parse_int(text.substr(14, 2), mi)) {
    bad();
  }
  if (text.size() == 19) {
    if (text[16] != ':' || !parse_int(text.substr(17, 2), s)) bad();
  } else if (text.size() != 16) {
    bad();
  }
  if (mo < 1 || mo > 12 || d < 1 || d > 31 || h > 23 || mi > 59 || s > 59 || h < 0 || mi < 0 || s < 0) bad();
  std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(mo)},
                                  std::chrono::day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) bad();
  return from_parts(Date::from_ymd(y, mo, d), h, mi, s);
}

std::string DateTime::cert() const {
  const Date d = date();
  const auto sod = seconds - static_cast<std::int64_t>(d.days) * 86400;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%02u/%02u/%04d %02d:%02d:%02d", d.month(), d.day(), d.year(),
                static_cast<int>(sod / 3600), static_cast<int>((sod / 60) % 60), static_cast<int>(sod % 60));
  return buf;
}

Date DateTime::date() const {
  auto days = seconds / 86400;
  if (seconds < 0 && seconds % 86400 != 0) --days;
  return Date{static_cast<std::int32_t>(days)};
}

double DateTime::minute_of_day() const {
  return static_cast<double>(seconds - static_cast<std::int64_t>(date().days) * 86400) / 60.0;
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

}  // namespace chromabehave
