#include "chromabehave/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "chromabehave/csv.hpp"

namespace chromabehave::ingest {

namespace fs = std::filesystem;

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::Logon: return "Logon";
    case EventKind::Logoff: return "Logoff";
    case EventKind::DeviceConnect: return "Connect";
    case EventKind::DeviceDisconnect: return "Disconnect";
    case EventKind::FileAccess: return "File";
    case EventKind::EmailSend: return "Email";
    case EventKind::HttpVisit: return "Http";
  }
  return "?";
}

std::string_view file_name(SourceKind source) {
  switch (source) {
    case SourceKind::Logon: return "logon.csv";
    case SourceKind::Device: return "device.csv";
    case SourceKind::File: return "file.csv";
    case SourceKind::Email: return "email.csv";
    case SourceKind::Http: return "http.csv";
  }
  return "";
}

SourceKind source_from_name(std::string_view name) {
  std::string n = to_lower(name);
  if (n.size() > 4 && n.ends_with(".csv")) n.resize(n.size() - 4);
  if (n == "logon") return SourceKind::Logon;
  if (n == "device") return SourceKind::Device;
  if (n == "file") return SourceKind::File;
  if (n == "email") return SourceKind::Email;
  if (n == "http") return SourceKind::Http;
  fail(ErrorCode::UnknownKind, "unknown log source '" + std::string(name) + "'");
}

SourceKind source_of(EventKind kind) {
  switch (kind) {
    case EventKind::Logon:
    case EventKind::Logoff: return SourceKind::Logon;
    case EventKind::DeviceConnect:
    case EventKind::DeviceDisconnect: return SourceKind::Device;
    case EventKind::FileAccess: return SourceKind::File;
    case EventKind::EmailSend: return SourceKind::Email;
    case EventKind::HttpVisit: return SourceKind::Http;
  }
  return SourceKind::Logon;
}

std::vector<std::string> EmailSend::recipients() const {
  std::vector<std::string> all = to;
  all.insert(all.end(), cc.begin(), cc.end());
  all.insert(all.end(), bcc.begin(), bcc.end());
  return all;
}

bool payload_matches_kind(const LogEvent& e) {
  switch (e.kind) {
    case EventKind::FileAccess: return std::holds_alternative<FileAccess>(e.payload);
    case EventKind::EmailSend: return std::holds_alternative<EmailSend>(e.payload);
    case EventKind::HttpVisit: return std::holds_alternative<HttpVisit>(e.payload);
    default: return std::holds_alternative<std::monostate>(e.payload);
  }
}

std::string domain_of(std::string_view address) {
  const auto at = address.rfind('@');
  if (at == std::string_view::npos) return "";
  return to_lower(address.substr(at + 1));
}

bool is_absolute_path(std::string_view path) {
  if (!path.empty() && (path[0] == '/' || path[0] == '\\')) return true;
  return path.size() >= 3 && std::isalpha(static_cast<unsigned char>(path[0])) && path[1] == ':' &&
         (path[2] == '\\' || path[2] == '/');
}

namespace {

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    auto end = s.find(';', start);
    if (end == std::string_view::npos) end = s.size();
    auto item = trim(s.substr(start, end - start));
    if (!item.empty()) out.push_back(std::move(item));
    start = end + 1;
  }
  return out;
}

std::string join_list(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out.push_back(';');
    out += items[i];
  }
  return out;
}

std::string basename_of(std::string_view path) {
  const auto pos = path.find_last_of("/\\");
  return std::string(pos == std::string_view::npos ? path : path.substr(pos + 1));
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  const std::string t = trim(s);
  if (t.empty()) return false;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
  return ec == std::errc{} && ptr == t.data() + t.size();
}

struct Columns {
  std::vector<std::string> names;
  std::vector<int> idx;
};

std::vector<std::string> default_columns(SourceKind kind) {
  switch (kind) {
    case SourceKind::Logon:
    case SourceKind::Device: return {"id", "date", "user", "pc", "activity"};
    case SourceKind::File: return {"id", "date", "user", "pc", "filename"};
    case SourceKind::Email:
      return {"id", "date", "user", "pc", "to", "cc", "bcc", "from", "size", "attachments", "content"};
    case SourceKind::Http: return {"id", "date", "user", "pc", "url", "content"};
  }
  return {};
}

bool looks_like_header(const std::vector<std::string>& rec) {
  return !rec.empty() && to_lower(trim(rec[0])) == "id";
}

}  // namespace

ParseResult parse_log_file(std::istream& source, SourceKind kind, const ParseOptions& opts) {
  ParseResult result;
  const auto required = default_columns(kind);
  std::vector<int> col(required.size());
  for (std::size_t i = 0; i < required.size(); ++i) col[i] = static_cast<int>(i);

  bool ok = true;
  auto first = csv::read_record(source, ok);
  if (!first) return result;

  std::optional<std::vector<std::string>> pending;
  if (looks_like_header(*first)) {
    csv::Header header(*first);
    for (std::size_t i = 0; i < required.size(); ++i) {
      col[i] = header.index(required[i]);
      // body/content columns are optional in older CERT releases
      const bool optional = required[i] == "content";
      if (col[i] < 0 && !optional) {
        fail(ErrorCode::MissingColumn, std::string(file_name(kind)) + " lacks column '" + required[i] + "'");
      }
    }
  } else {
    pending = std::move(first);
  }

  auto field = [&](const std::vector<std::string>& rec, std::size_t which) -> std::string {
    const int c = col[which];
    if (c < 0 || static_cast<std::size_t>(c) >= rec.size()) return "";
    return rec[static_cast<std::size_t>(c)];
  };

  std::size_t row = 0;
  while (true) {
    std::optional<std::vector<std::string>> rec;
    if (pending) {
      rec = std::move(pending);
      pending.reset();
    } else {
      rec = csv::read_record(source, ok);
    }
    if (!rec) break;
    if (rec->size() == 1 && trim((*rec)[0]).empty()) continue;  // blank line
    ++row;
    try {
      if (!ok) fail(ErrorCode::MalformedRow, "unterminated quoted field");
      std::size_t needed = 0;
      for (std::size_t i = 0; i < col.size(); ++i) {
        if (col[i] >= 0 && required[i] != "content") needed = std::max(needed, static_cast<std::size_t>(col[i]) + 1);
      }
      if (rec->size() < needed) fail(ErrorCode::MalformedRow, "too few fields");
      LogEvent e;
      e.event_id = trim(field(*rec, 0));
      e.timestamp = DateTime::parse_cert(trim(field(*rec, 1)));
      e.user = trim(field(*rec, 2));
      e.pc = trim(field(*rec, 3));
      if (e.user.empty()) fail(ErrorCode::MalformedRow, "empty user");
      if (e.pc.empty()) fail(ErrorCode::MalformedRow, "empty pc");
      switch (kind) {
        case SourceKind::Logon: {
          const auto act = to_lower(trim(field(*rec, 4)));
          if (act == "logon") e.kind = EventKind::Logon;
          else if (act == "logoff") e.kind = EventKind::Logoff;
          else fail(ErrorCode::MalformedRow, "unknown logon activity '" + act + "'");
          break;
        }
        case SourceKind::Device: {
          const auto act = to_lower(trim(field(*rec, 4)));
          if (act == "connect") e.kind = EventKind::DeviceConnect;
          else if (act == "disconnect") e.kind = EventKind::DeviceDisconnect;
          else fail(ErrorCode::MalformedRow, "unknown device activity '" + act + "'");
          break;
        }
        case SourceKind::File: {
          FileAccess f;
          f.path = trim(field(*rec, 4));
          if (!is_absolute_path(f.path)) fail(ErrorCode::MalformedRow, "file path not absolute");
          f.filename = basename_of(f.path);
          e.kind = EventKind::FileAccess;
          e.payload = std::move(f);
          break;
        }
        case SourceKind::Email: {
          EmailSend m;
          m.to = split_list(field(*rec, 4));
          m.cc = split_list(field(*rec, 5));
          m.bcc = split_list(field(*rec, 6));
          m.from = trim(field(*rec, 7));
          if (!parse_number(field(*rec, 8), m.size_bytes) || m.size_bytes < 0) {
            fail(ErrorCode::MalformedRow, "bad email size");
          }
          if (!parse_number(field(*rec, 9), m.attachments) || m.attachments < 0) {
            fail(ErrorCode::MalformedRow, "bad attachment count");
          }
          m.body = field(*rec, 10);
          e.kind = EventKind::EmailSend;
          e.payload = std::move(m);
          break;
        }
        case SourceKind::Http: {
          HttpVisit h;
          h.url = trim(field(*rec, 4));
          if (h.url.empty()) fail(ErrorCode::MalformedRow, "empty url");
          h.content = field(*rec, 5);
          e.kind = EventKind::HttpVisit;
          e.payload = std::move(h);
          break;
        }
      }
      result.events.push_back(std::move(e));
    } catch (const Error& err) {
      if (err.code() != ErrorCode::MalformedRow && err.code() != ErrorCode::InvalidArgument) throw;
      if (opts.strict) fail(ErrorCode::MalformedRow, "row " + std::to_string(row) + ": " + err.what());
      result.errors.push_back({row, err.what()});
    }
  }
  result.rows = row;
  return result;
}

std::string serialize_events(const std::vector<LogEvent>& events, SourceKind kind) {
  std::string out = csv::join(default_columns(kind)) + "\n";
  for (const auto& e : events) {
    if (source_of(e.kind) != kind) continue;
    std::vector<std::string> f{e.event_id, e.timestamp.cert(), e.user, e.pc};
    switch (kind) {
      case SourceKind::Logon:
      case SourceKind::Device: f.emplace_back(to_string(e.kind)); break;
      case SourceKind::File: f.push_back(std::get<FileAccess>(e.payload).path); break;
      case SourceKind::Email: {
        const auto& m = std::get<EmailSend>(e.payload);
        f.push_back(join_list(m.to));
        f.push_back(join_list(m.cc));
        f.push_back(join_list(m.bcc));
        f.push_back(m.from);
        f.push_back(std::to_string(m.size_bytes));
        f.push_back(std::to_string(m.attachments));
        f.push_back(m.body);
        break;
      }
      case SourceKind::Http: {
        const auto& h = std::get<HttpVisit>(e.payload);
        f.push_back(h.url);
        f.push_back(h.content);
        break;
      }
    }
    out += csv::join(f);
    out.push_back('\n');
  }
  return out;
}

// ---------------------------------------------------------------------------
// LDAP

namespace {

std::vector<std::vector<std::string>> read_all(std::istream& in, csv::Header& header) {
  bool ok = true;
  auto head = csv::read_record(in, ok);
  if (!head) fail(ErrorCode::MissingColumn, "empty CSV (no header)");
  header = csv::Header(*head);
  std::vector<std::vector<std::string>> rows;
  while (auto rec = csv::read_record(in, ok)) {
    if (!ok) fail(ErrorCode::MalformedRow, "unterminated quoted field");
    if (rec->size() == 1 && trim((*rec)[0]).empty()) continue;
    rows.push_back(std::move(*rec));
  }
  return rows;
}

std::string at(const std::vector<std::string>& rec, int idx) {
  if (idx < 0 || static_cast<std::size_t>(idx) >= rec.size()) return "";
  return trim(rec[static_cast<std::size_t>(idx)]);
}

}  // namespace

std::vector<LdapRecord> load_ldap(std::istream& snapshot, std::istream* psychometric) {
  csv::Header h;
  const auto rows = read_all(snapshot, h);
  const int c_user = h.index("user_id");
  const int c_role = h.index("role");
  const int c_sup = h.index("supervisor");
  const int c_team = h.index("team");
  for (auto [idx, name] : {std::pair{c_user, "user_id"}, {c_role, "role"}, {c_sup, "supervisor"}, {c_team, "team"}}) {
    if (idx < 0) fail(ErrorCode::MissingColumn, std::string("LDAP snapshot lacks '") + name + "'");
  }
  const int c_name = h.index("employee_name");
  const int c_email = h.index("email");

  std::vector<LdapRecord> out;
  std::map<std::string, std::size_t> by_user;
  std::map<std::string, std::string> name_to_user;
  for (const auto& rec : rows) {
    LdapRecord r;
    r.user = at(rec, c_user);
    if (r.user.empty()) fail(ErrorCode::MalformedRow, "LDAP row with empty user_id");
    r.role = at(rec, c_role);
    r.supervisor = at(rec, c_sup);
    r.team = at(rec, c_team);
    r.employee_name = at(rec, c_name);
    r.email = at(rec, c_email);
    if (!by_user.emplace(r.user, out.size()).second) fail(ErrorCode::DuplicateUser, r.user);
    if (!r.employee_name.empty()) name_to_user.emplace(r.employee_name, r.user);
    out.push_back(std::move(r));
  }
  // CERT snapshots name the supervisor by employee name; resolve to user ids.
  for (auto& r : out) {
    if (!r.supervisor.empty() && !by_user.contains(r.supervisor)) {
      auto it = name_to_user.find(r.supervisor);
      if (it != name_to_user.end()) r.supervisor = it->second;
    }
  }

  if (psychometric) {
    csv::Header ph;
    const auto prow = read_all(*psychometric, ph);
    const int p_user = ph.index("user_id");
    if (p_user < 0) fail(ErrorCode::MissingColumn, "psychometric CSV lacks 'user_id'");
    const std::array<const char*, 5> dims{"O", "C", "E", "A", "N"};
    std::array<int, 5> p_col{};
    for (std::size_t d = 0; d < 5; ++d) {
      p_col[d] = ph.index(dims[d]);
      if (p_col[d] < 0) fail(ErrorCode::MissingColumn, std::string("psychometric CSV lacks '") + dims[d] + "'");
    }
    for (const auto& rec : prow) {
      auto it = by_user.find(at(rec, p_user));
      if (it == by_user.end()) continue;
      auto& r = out[it->second];
      for (std::size_t d = 0; d < 5; ++d) {
        double v = 0;
        if (!parse_number(at(rec, p_col[d]), v) || v < 0) {
          fail(ErrorCode::MalformedRow, "bad psychometric score for " + r.user);
        }
        // CERT releases score on an integer 10..50 scale.
        if (v > 1.0) v = std::min(v / 50.0, 1.0);
        r.ocean[d] = v;
      }
    }
  }
  return out;
}

namespace {

std::optional<Date> snapshot_date(const fs::path& p) {
  const std::string stem = p.stem().string();
  try {
    if (stem.size() == 7) return Date::parse_iso(stem + "-01");
    if (stem.size() == 10) return Date::parse_iso(stem);
  } catch (const Error&) {
  }
  return std::nullopt;
}

}  // namespace

std::vector<LdapRecord> load_ldap_dir(const fs::path& dir, const std::optional<fs::path>& psychometric) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) fail(ErrorCode::Io, "no LDAP snapshots in " + dir.string());

  std::map<std::string, LdapRecord> merged;
  std::map<std::string, Date> last_seen;
  std::optional<Date> latest;
  for (std::size_t i = 0; i < files.size(); ++i) {
    std::ifstream snap(files[i]);
    std::optional<std::ifstream> psy;
    if (psychometric) psy.emplace(*psychometric);
    auto records = load_ldap(snap, psy ? &*psy : nullptr);
    const auto when = snapshot_date(files[i]);
    if (when) latest = when;
    for (auto& r : records) {
      auto it = merged.find(r.user);
      const auto from = it == merged.end() ? when : it->second.employed_from;
      r.employed_from = from;
      if (when) last_seen[r.user] = *when;
      merged[r.user] = std::move(r);
    }
  }
  std::vector<LdapRecord> out;
  for (auto& [user, r] : merged) {
    auto seen = last_seen.find(user);
    if (latest && seen != last_seen.end() && seen->second < *latest) r.employed_to = seen->second;
    out.push_back(std::move(r));
  }
  return out;
}

void write_ldap_snapshot(std::ostream& out, const std::vector<LdapRecord>& records) {
  out << "employee_name,user_id,email,role,team,supervisor\n";
  for (const auto& r : records) {
    out << csv::join({r.employee_name, r.user, r.email, r.role, r.team, r.supervisor}) << '\n';
  }
}

void write_psychometric(std::ostream& out, const std::vector<LdapRecord>& records) {
  out << "employee_name,user_id,O,C,E,A,N\n";
  char buf[32];
  for (const auto& r : records) {
    out << csv::escape(r.employee_name) << ',' << csv::escape(r.user);
    for (double v : r.ocean) {
      std::snprintf(buf, sizeof buf, "%.4f", v);
      out << ',' << buf;
    }
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Word frequencies

std::string normalize_word(std::string_view word) {
  std::string out;
  out.reserve(word.size());
  for (char c : word) {
    const auto u = static_cast<unsigned char>(c);
    if (std::isalnum(u) || u >= 0x80) out.push_back(static_cast<char>(std::tolower(u)));
  }
  return out;
}

double FrequencyDict::lookup(std::string_view word) const {
  auto it = freq_.find(normalize_word(word));
  return it == freq_.end() ? 0.0 : it->second;
}

double FrequencyDict::total_mass() const {
  // Sum in sorted-key order so the result does not depend on hash layout.
  std::vector<std::pair<std::string, double>> items(freq_.begin(), freq_.end());
  std::sort(items.begin(), items.end());
  double s = 0;
  for (const auto& [w, f] : items) s += f;
  return s;
}

FrequencyDict load_word_frequencies(std::istream& source) {
  std::map<std::string, double> counts;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(source, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto sep = t.find_first_of(", \t");
    if (sep == std::string::npos) fail(ErrorCode::MalformedRow, "line " + std::to_string(lineno) + ": expected word,count");
    const std::string word = normalize_word(t.substr(0, sep));
    const std::string count_text = trim(t.substr(sep + 1));
    double count = 0;
    if (!parse_number(count_text, count)) {
      if (lineno == 1) continue;  // header
      fail(ErrorCode::MalformedRow, "line " + std::to_string(lineno) + ": bad count");
    }
    if (count < 0) fail(ErrorCode::NegativeCount, "word '" + word + "'");
    if (word.empty()) continue;
    counts[word] += count;
  }
  double total = 0;
  for (const auto& [w, c] : counts) total += c;
  if (counts.empty() || total <= 0) fail(ErrorCode::EmptyDictionary, "no positive counts");
  std::unordered_map<std::string, double> freq;
  freq.reserve(counts.size());
  for (const auto& [w, c] : counts) freq.emplace(w, c / total);
  return FrequencyDict(std::move(freq));
}

// ---------------------------------------------------------------------------
// EventStore

EventStore::EventStore(std::vector<LogEvent> events) : events_(std::move(events)) {
  for (std::size_t i = 0; i < events_.size(); ++i) {
    const auto d = events_[i].timestamp.date().days;
    by_user_day_[{events_[i].user, d}].push_back(i);
    by_date_[d].push_back(i);
  }
}

std::vector<std::size_t> EventStore::indices_for(const std::string& user, Date date) const {
  auto it = by_user_day_.find({user, date.days});
  return it == by_user_day_.end() ? std::vector<std::size_t>{} : it->second;
}

std::vector<const LogEvent*> EventStore::events_for(const std::string& user, Date date) const {
  std::vector<const LogEvent*> out;
  auto it = by_user_day_.find({user, date.days});
  if (it == by_user_day_.end()) return out;
  out.reserve(it->second.size());
  for (auto i : it->second) out.push_back(&events_[i]);
  return out;
}

std::vector<std::pair<std::string, Date>> EventStore::user_days() const {
  std::vector<std::pair<std::string, Date>> out;
  out.reserve(by_user_day_.size());
  for (const auto& [key, idx] : by_user_day_) out.emplace_back(key.first, Date{key.second});
  return out;
}

std::vector<Date> EventStore::dates() const {
  std::vector<Date> out;
  for (const auto& [d, idx] : by_date_) out.push_back(Date{d});
  return out;
}

std::vector<const LogEvent*> EventStore::events_on(Date date) const {
  std::vector<const LogEvent*> out;
  auto it = by_date_.find(date.days);
  if (it == by_date_.end()) return out;
  for (auto i : it->second) out.push_back(&events_[i]);
  return out;
}

EventStore EventStore::load_dir(const fs::path& dir, const ParseOptions& opts, LoadReport* report) {
  std::vector<LogEvent> all;
  for (auto source : kAllSources) {
    const fs::path p = dir / std::string(file_name(source));
    if (!fs::exists(p)) continue;
    std::ifstream in(p, std::ios::binary);
    if (!in) fail(ErrorCode::Io, "cannot open " + p.string());
    auto parsed = parse_log_file(in, source, opts);
    if (report) {
      report->rows[std::string(file_name(source))] = parsed.rows;
      for (auto& e : parsed.errors) report->errors.emplace_back(std::string(file_name(source)), std::move(e));
    }
    std::move(parsed.events.begin(), parsed.events.end(), std::back_inserter(all));
  }
  return EventStore(std::move(all));
}

void EventStore::save_dir(const fs::path& dir) const {
  fs::create_directories(dir);
  for (auto source : kAllSources) {
    std::vector<LogEvent> part;
    for (const auto& e : events_) {
      if (source_of(e.kind) == source) part.push_back(e);
    }
    std::stable_sort(part.begin(), part.end(), [](const LogEvent& a, const LogEvent& b) {
      if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
      if (a.user != b.user) return a.user < b.user;
      return a.event_id < b.event_id;
    });
    std::ofstream out(dir / std::string(file_name(source)), std::ios::binary);
    out << serialize_events(part, source);
    if (!out) fail(ErrorCode::Io, "write failed in " + dir.string());
  }
}

}  // namespace chromabehave::ingest
