#pragma once

#include <array>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "chromabehave/common.hpp"

namespace chromabehave::ingest {

enum class EventKind { Logon, Logoff, DeviceConnect, DeviceDisconnect, FileAccess, EmailSend, HttpVisit };

/// The five CERT audit sources, one CSV file each.
enum class SourceKind { Logon, Device, File, Email, Http };

std::string_view to_string(EventKind kind);
std::string_view file_name(SourceKind source);
/// Maps `logon.csv`, `device`, `HTTP.csv`, ... to a source. Throws UnknownKind.
SourceKind source_from_name(std::string_view name);
inline constexpr std::array<SourceKind, 5> kAllSources = {SourceKind::Logon, SourceKind::Device, SourceKind::File,
                                                          SourceKind::Email, SourceKind::Http};

struct FileAccess {
  std::string path;  // absolute, machine-rooted; `/` or `X:\` prefixed
  std::string filename;
  bool operator==(const FileAccess&) const = default;
};

struct EmailSend {
  std::vector<std::string> to;
  std::vector<std::string> cc;
  std::vector<std::string> bcc;
  std::string from;
  std::int64_t size_bytes = 0;  // raw CERT `size` column, stored as bytes
  int attachments = 0;
  std::string body;

  std::vector<std::string> recipients() const;
  bool operator==(const EmailSend&) const = default;
};

struct HttpVisit {
  std::string url;
  std::string content;
  bool operator==(const HttpVisit&) const = default;
};

using Payload = std::variant<std::monostate, FileAccess, EmailSend, HttpVisit>;

struct LogEvent {
  std::string event_id;
  std::string user;
  DateTime timestamp;
  std::string pc;
  EventKind kind = EventKind::Logon;
  Payload payload;

  bool operator==(const LogEvent&) const = default;
};

/// True when the payload variant is the one `kind` requires.
bool payload_matches_kind(const LogEvent& e);
std::string domain_of(std::string_view address);
bool is_absolute_path(std::string_view path);

struct MalformedRow {
  std::size_t row = 0;  // 1-based data row index (header excluded)
  std::string reason;
};

struct ParseOptions {
  bool strict = false;
};

struct ParseResult {
  std::vector<LogEvent> events;
  std::vector<MalformedRow> errors;
  std::size_t rows = 0;
};

/// Parses one CERT-dialect CSV. Malformed rows are collected; in strict mode
/// the first one throws MalformedRow.
ParseResult parse_log_file(std::istream& source, SourceKind kind, const ParseOptions& opts = {});

/// Inverse of parse_log_file for events of the given source.
std::string serialize_events(const std::vector<LogEvent>& events, SourceKind kind);

struct LdapRecord {
  std::string user;
  std::string employee_name;
  std::string email;
  std::string role;
  std::string supervisor;  // user id ("" for the top of the hierarchy)
  std::string team;
  std::array<double, 5> ocean{0.5, 0.5, 0.5, 0.5, 0.5};
  std::optional<Date> employed_from;
  std::optional<Date> employed_to;  // nullopt while still employed
};

/// Loads one LDAP snapshot and joins an optional psychometric CSV on user id.
/// Users missing from the psychometric file get 0.5 on every dimension.
std::vector<LdapRecord> load_ldap(std::istream& snapshot, std::istream* psychometric = nullptr);

/// Loads every `*.csv` snapshot in `dir` (file stem `YYYY-MM` or `YYYY-MM-DD`
/// gives the snapshot date), merging employment ranges across snapshots.
std::vector<LdapRecord> load_ldap_dir(const std::filesystem::path& dir,
                                      const std::optional<std::filesystem::path>& psychometric);

void write_ldap_snapshot(std::ostream& out, const std::vector<LdapRecord>& records);
void write_psychometric(std::ostream& out, const std::vector<LdapRecord>& records);

/// Word to relative frequency. Keys are lowercase, punctuation stripped.
class FrequencyDict {
 public:
  FrequencyDict() = default;
  explicit FrequencyDict(std::unordered_map<std::string, double> freq) : freq_(std::move(freq)) {}

  /// Absent words have frequency exactly 0.
  double lookup(std::string_view word) const;
  std::size_t size() const { return freq_.size(); }
  double total_mass() const;
  const std::unordered_map<std::string, double>& entries() const { return freq_; }

 private:
  std::unordered_map<std::string, double> freq_;
};

std::string normalize_word(std::string_view word);

/// Two-column `word,count` text (comma or whitespace separated, optional header).
FrequencyDict load_word_frequencies(std::istream& source);

/// All parsed events of a corpus, one sorted partition per source, with a
/// (user, date) index. Immutable once built.
class EventStore {
 public:
  EventStore() = default;
  explicit EventStore(std::vector<LogEvent> events);

  const std::vector<LogEvent>& events() const { return events_; }
  std::vector<std::size_t> indices_for(const std::string& user, Date date) const;
  std::vector<const LogEvent*> events_for(const std::string& user, Date date) const;
  /// Distinct (user, date) keys with at least one event, sorted.
  std::vector<std::pair<std::string, Date>> user_days() const;
  std::vector<Date> dates() const;
  std::vector<const LogEvent*> events_on(Date date) const;

  struct LoadReport {
    std::map<std::string, std::size_t> rows;
    std::vector<std::pair<std::string, MalformedRow>> errors;
  };

  /// Reads the five source files that exist under `dir`.
  static EventStore load_dir(const std::filesystem::path& dir, const ParseOptions& opts = {},
                             LoadReport* report = nullptr);
  /// Writes one CSV per source sorted by (timestamp, user, event id).
  void save_dir(const std::filesystem::path& dir) const;

 private:
  std::vector<LogEvent> events_;
  std::map<std::pair<std::string, std::int32_t>, std::vector<std::size_t>> by_user_day_;
  std::map<std::int32_t, std::vector<std::size_t>> by_date_;
};

SourceKind source_of(EventKind kind);

}  // namespace chromabehave::ingest
