#include "chromabehave/features.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>

#include "chromabehave/csv.hpp"

namespace chromabehave::features {

using ingest::EventKind;
using ingest::LogEvent;

const std::array<std::string_view, kFeatureCount> kFeatureNames = {
    "first_logon_offset",  "last_logon_offset",   "pre_office_gap",    "post_office_gap",
    "logons",              "logons_after",        "logoffs",           "logoffs_after",
    "unique_pcs",          "unique_pcs_after",    "session_len_after", "device_uses",
    "device_uses_after",   "executables",         "FPV",               "FPV_After",
    "emails_external",     "supervisor_recipients", "attachments",     "email_size_mean",
    "recipients",          "CC_Disgruntled",      "CC_Job",            "CC_Wikileaks",
    "CC_Keylogger",
};

int feature_index(std::string_view codename) {
  for (std::size_t i = 0; i < kFeatureCount; ++i) {
    if (kFeatureNames[i] == codename) return static_cast<int>(i);
  }
  return -1;
}

void OfficeHoursConfig::validate() const {
  if (!(start < end) || start < 0 || end > 24 * 60) fail(ErrorCode::InvalidArgument, "office hours need start < end");
}

// ---------------------------------------------------------------------------
// File tree

FileTree::FileTree() { nodes_.push_back(Node{}); }

std::vector<std::string> split_path(std::string_view path) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : path) {
    if (c == '/' || c == '\\') {
      if (!cur.empty()) parts.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) parts.push_back(std::move(cur));
  return parts;
}

namespace {
std::string leaf_key(std::string_view machine, const std::vector<std::string>& parts) {
  std::string key(machine);
  for (const auto& p : parts) {
    key.push_back('\x1f');
    key += p;
  }
  return key;
}
}  // namespace

FileTree FileTree::build(std::span<const std::pair<std::string, std::string>> machine_paths) {
  FileTree t;
  for (const auto& [m, p] : machine_paths) t.insert(m, p);
  return t;
}

FileTree::NodeId FileTree::insert(std::string_view machine, std::string_view path) {
  const auto parts = split_path(path);
  const std::string key = leaf_key(machine, parts);
  if (auto it = leaf_index_.find(key); it != leaf_index_.end()) return it->second;

  auto child = [this](NodeId parent, std::string_view name) {
    auto& kids = nodes_[static_cast<std::size_t>(parent)].children;
    if (auto it = kids.find(name); it != kids.end()) return it->second;
    const auto id = static_cast<NodeId>(nodes_.size());
    const int d = nodes_[static_cast<std::size_t>(parent)].depth + 1;
    nodes_[static_cast<std::size_t>(parent)].children.emplace(std::string(name), id);
    Node n;
    n.parent = parent;
    n.depth = d;
    nodes_.push_back(std::move(n));
    return id;
  };
  NodeId cur = child(kRoot, machine);
  for (const auto& p : parts) cur = child(cur, p);
  nodes_[static_cast<std::size_t>(cur)].leaf = true;
  leaf_index_.emplace(key, cur);
  return cur;
}

std::optional<FileTree::NodeId> FileTree::find_leaf(std::string_view machine, std::string_view path) const {
  auto it = leaf_index_.find(leaf_key(machine, split_path(path)));
  if (it == leaf_index_.end()) return std::nullopt;
  return it->second;
}

bool FileTree::is_leaf(NodeId n) const {
  return n >= 0 && static_cast<std::size_t>(n) < nodes_.size() && nodes_[static_cast<std::size_t>(n)].leaf;
}

FileTree::NodeId FileTree::lca(NodeId a, NodeId b) const {
  while (depth(a) > depth(b)) a = parent(a);
  while (depth(b) > depth(a)) b = parent(b);
  while (a != b) {
    a = parent(a);
    b = parent(b);
  }
  return a;
}

std::vector<FileTree::NodeId> FileTree::neighbors(NodeId n) const {
  std::vector<NodeId> out;
  const auto& node = nodes_.at(static_cast<std::size_t>(n));
  if (node.parent >= 0) out.push_back(node.parent);
  for (const auto& [name, id] : node.children) out.push_back(id);
  return out;
}

int path_distance(const FileTree& tree, FileTree::NodeId i, FileTree::NodeId j) {
  if (!tree.is_leaf(i) || !tree.is_leaf(j)) fail(ErrorCode::UnknownLeaf, "path_distance on a non-leaf node");
  return tree.depth(i) + tree.depth(j) - 2 * tree.depth(tree.lca(i, j));
}

double file_path_variance(const FileTree& tree, std::span<const FileTree::NodeId> accessed) {
  std::vector<FileTree::NodeId> leaves(accessed.begin(), accessed.end());
  std::sort(leaves.begin(), leaves.end());
  leaves.erase(std::unique(leaves.begin(), leaves.end()), leaves.end());
  const auto n = leaves.size();
  if (n <= 1) return 0.0;
  double sum = 0.0;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      const double d = path_distance(tree, leaves[a], leaves[b]);
      sum += 2.0 * d * d;  // both ordered pairs
    }
  }
  const double nn = static_cast<double>(n);
  return sum / (2.0 * nn * nn - nn);
}

// ---------------------------------------------------------------------------
// Labels

std::string_view label_name(Label l) {
  switch (l) {
    case Label::Benign: return "benign";
    case Label::Scenario1: return "scenario1";
    case Label::Scenario2: return "scenario2";
    case Label::Scenario3: return "scenario3";
  }
  return "benign";
}

Label label_from_name(std::string_view name) {
  const auto n = to_lower(trim(name));
  if (n == "benign" || n == "0" || n.empty()) return Label::Benign;
  if (n == "scenario1" || n == "1") return Label::Scenario1;
  if (n == "scenario2" || n == "2") return Label::Scenario2;
  if (n == "scenario3" || n == "3") return Label::Scenario3;
  fail(ErrorCode::InvalidArgument, "unknown label '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// Extraction

OrgDay OrgDay::build(Date date, std::span<const LogEvent* const> events) {
  OrgDay org;
  org.date = date;
  for (const auto* e : events) {
    if (e->kind == EventKind::FileAccess) {
      org.tree.insert(e->pc, std::get<ingest::FileAccess>(e->payload).path);
    } else if (e->kind == EventKind::EmailSend) {
      const auto& m = std::get<ingest::EmailSend>(e->payload);
      org.emails_by_sender[to_lower(m.from)].push_back(&m);
    }
  }
  return org;
}

bool TextVerdictCache::classify(const conical::ConicalModel& model, conical::Topic topic, const std::string& text) {
  auto& memo = memo_[static_cast<std::size_t>(topic)];
  if (auto it = memo.find(text); it != memo.end()) return it->second;
  const bool v = model.classify_text(text);
  memo.emplace(text, v);
  return v;
}

std::string email_address_of(const std::string& user, const FeatureContext& ctx) {
  if (ctx.directory) {
    auto it = ctx.directory->find(user);
    if (it != ctx.directory->end() && !it->second.email.empty()) return to_lower(it->second.email);
  }
  return to_lower(user + "@" + ctx.org_domain);
}

namespace {

bool ends_with_ci(std::string_view s, std::string_view suffix) {
  if (s.size() < suffix.size()) return false;
  return to_lower(s.substr(s.size() - suffix.size())) == suffix;
}

double mean_or_zero(double sum, std::size_t n) { return n ? sum / static_cast<double>(n) : 0.0; }

}  // namespace

UserDayFeatures extract_features(const std::string& user, Date date, std::span<const LogEvent* const> events,
                                 const OrgDay& org, const FeatureContext& ctx) {
  ctx.office.validate();
  const auto& office = ctx.office;
  UserDayFeatures out;
  out.user = user;
  out.date = date;
  auto& f = out.f;
  f.fill(0.0);

  std::vector<const LogEvent*> ev(events.begin(), events.end());
  std::stable_sort(ev.begin(), ev.end(), [](const LogEvent* a, const LogEvent* b) { return a->timestamp < b->timestamp; });

  auto classify = [&](conical::Topic t, const std::string& text) {
    if (!ctx.detectors) return false;
    const auto& model = (*ctx.detectors)[t];
    return ctx.cache ? ctx.cache->classify(model, t, text) : model.classify_text(text);
  };

  // Logon source
  std::vector<double> logon_times;
  double pre_gap = 0, post_gap = 0;
  std::size_t pre_n = 0, post_n = 0;
  std::set<std::string> pcs, pcs_after;
  for (const auto* e : ev) {
    const double t = e->timestamp.minute_of_day();
    if (e->kind == EventKind::Logon) {
      logon_times.push_back(t);
      f[4] += 1;
      if (office.outside(t)) {
        f[5] += 1;
        pcs_after.insert(e->pc);
      }
      if (t < office.start) {
        pre_gap += office.start - t;
        ++pre_n;
      } else if (t >= office.end) {
        post_gap += t - office.end;
        ++post_n;
      }
      pcs.insert(e->pc);
    } else if (e->kind == EventKind::Logoff) {
      f[6] += 1;
      if (office.outside(t)) {
        f[7] += 1;
        pcs_after.insert(e->pc);
      }
      pcs.insert(e->pc);
    }
  }
  if (!logon_times.empty()) {
    f[0] = logon_times.front() - office.start;
    f[1] = logon_times.back() - office.start;
  }
  f[2] = mean_or_zero(pre_gap, pre_n);
  f[3] = mean_or_zero(post_gap, post_n);
  f[8] = static_cast<double>(pcs.size());
  f[9] = static_cast<double>(pcs_after.size());

  // Sessions: each Logon pairs with the next Logoff on the same pc; open
  // sessions close at 23:59.
  {
    double total = 0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < ev.size(); ++i) {
      if (ev[i]->kind != EventKind::Logon) continue;
      const double start = ev[i]->timestamp.minute_of_day();
      if (!office.outside(start)) continue;
      double stop = 23 * 60 + 59;
      for (std::size_t j = i + 1; j < ev.size(); ++j) {
        if (ev[j]->kind == EventKind::Logoff && ev[j]->pc == ev[i]->pc) {
          stop = ev[j]->timestamp.minute_of_day();
          break;
        }
      }
      total += std::max(0.0, stop - start);
      ++n;
    }
    f[10] = mean_or_zero(total, n);
  }

  // Device, file, email, http
  std::vector<FileTree::NodeId> leaves, leaves_after;
  double email_size = 0;
  std::size_t email_n = 0;
  for (const auto* e : ev) {
    const double t = e->timestamp.minute_of_day();
    switch (e->kind) {
      case EventKind::DeviceConnect:
        f[11] += 1;
        if (office.outside(t)) f[12] += 1;
        break;
      case EventKind::FileAccess: {
        const auto& fa = std::get<ingest::FileAccess>(e->payload);
        if (ends_with_ci(fa.filename, ".exe")) f[13] += 1;
        if (auto leaf = org.tree.find_leaf(e->pc, fa.path)) {
          leaves.push_back(*leaf);
          if (office.outside(t)) leaves_after.push_back(*leaf);
        }
        break;
      }
      case EventKind::EmailSend: {
        const auto& m = std::get<ingest::EmailSend>(e->payload);
        const auto rcpt = m.recipients();
        bool external = false;
        for (const auto& r : rcpt) {
          if (ingest::domain_of(r) != to_lower(ctx.org_domain)) external = true;
        }
        if (external) f[16] += 1;
        f[18] += m.attachments;
        email_size += static_cast<double>(m.size_bytes);
        ++email_n;
        f[20] += static_cast<double>(rcpt.size());
        if (classify(conical::Topic::Disgruntled, m.body)) f[21] += 1;
        break;
      }
      case EventKind::HttpVisit: {
        const auto& h = std::get<ingest::HttpVisit>(e->payload);
        if (classify(conical::Topic::JobSite, h.content)) f[22] += 1;
        if (classify(conical::Topic::Wikileaks, h.content)) f[23] += 1;
        if (classify(conical::Topic::Keylogger, h.content)) f[24] += 1;
        break;
      }
      default: break;
    }
  }
  f[14] = file_path_variance(org.tree, leaves);
  f[15] = file_path_variance(org.tree, leaves_after);
  f[19] = mean_or_zero(email_size, email_n);

  // Within-domain recipients of mail sent from the supervisor's address today.
  if (ctx.directory) {
    auto it = ctx.directory->find(user);
    if (it != ctx.directory->end() && !it->second.supervisor.empty()) {
      const auto addr = email_address_of(it->second.supervisor, ctx);
      if (auto sent = org.emails_by_sender.find(addr); sent != org.emails_by_sender.end()) {
        for (const auto* m : sent->second) {
          for (const auto& r : m->recipients()) {
            if (ingest::domain_of(r) == to_lower(ctx.org_domain)) f[17] += 1;
          }
        }
      }
    }
  }
  return out;
}

std::vector<LabeledDay> extract_all(const ingest::EventStore& store, const std::vector<ingest::LdapRecord>& ldap,
                                    const conical::TopicDetectors& detectors, const FeatureContext& base,
                                    const std::map<std::pair<std::string, std::int32_t>, Label>& labels) {
  std::unordered_map<std::string, ingest::LdapRecord> directory;
  for (const auto& r : ldap) directory.emplace(r.user, r);
  TextVerdictCache cache;
  FeatureContext ctx = base;
  ctx.detectors = &detectors;
  ctx.directory = &directory;
  if (!ctx.cache) ctx.cache = &cache;

  std::vector<LabeledDay> out;
  const auto keys = store.user_days();
  std::map<std::int32_t, std::vector<std::size_t>> by_date;
  for (std::size_t i = 0; i < keys.size(); ++i) by_date[keys[i].second.days].push_back(i);
  out.resize(keys.size());
  for (const auto& [d, items] : by_date) {
    const auto day_events = store.events_on(Date{d});
    const OrgDay org = OrgDay::build(Date{d}, day_events);
    for (auto i : items) {
      const auto ev = store.events_for(keys[i].first, keys[i].second);
      out[i].day = extract_features(keys[i].first, keys[i].second, ev, org, ctx);
      auto it = labels.find({keys[i].first, d});
      out[i].label = it == labels.end() ? Label::Benign : it->second;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

void write_features_csv(std::ostream& out, const std::vector<LabeledDay>& days, bool with_label) {
  out << "user,date";
  for (auto n : kFeatureNames) out << ',' << n;
  if (with_label) out << ",label";
  out << '\n';
  for (const auto& d : days) {
    out << csv::escape(d.day.user) << ',' << d.day.date.iso();
    for (double v : d.day.f) out << ',' << format_double(v);
    if (with_label) out << ',' << label_name(d.label);
    out << '\n';
  }
}

std::vector<LabeledDay> read_features_csv(std::istream& in) {
  bool ok = true;
  auto head = csv::read_record(in, ok);
  if (!head) fail(ErrorCode::MissingColumn, "features CSV is empty");
  csv::Header h(*head);
  const int c_user = h.index("user");
  const int c_date = h.index("date");
  if (c_user < 0 || c_date < 0) fail(ErrorCode::MissingColumn, "features CSV lacks user/date");
  std::array<int, kFeatureCount> cols{};
  for (std::size_t i = 0; i < kFeatureCount; ++i) {
    cols[i] = h.index(kFeatureNames[i]);
    if (cols[i] < 0) fail(ErrorCode::MissingColumn, "features CSV lacks '" + std::string(kFeatureNames[i]) + "'");
  }
  const int c_label = h.index("label");
  std::vector<LabeledDay> out;
  std::size_t row = 0;
  while (auto rec = csv::read_record(in, ok)) {
    ++row;
    if (rec->size() == 1 && trim((*rec)[0]).empty()) continue;
    if (!ok || rec->size() < h.size()) fail(ErrorCode::MalformedRow, "features row " + std::to_string(row));
    LabeledDay d;
    d.day.user = (*rec)[static_cast<std::size_t>(c_user)];
    d.day.date = Date::parse_iso((*rec)[static_cast<std::size_t>(c_date)]);
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
      const auto& s = (*rec)[static_cast<std::size_t>(cols[i])];
      double v = 0;
      auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc{} || ptr != s.data() + s.size()) {
        fail(ErrorCode::MalformedRow, "features row " + std::to_string(row) + " column " + std::string(kFeatureNames[i]));
      }
      d.day.f[i] = v;
    }
    if (c_label >= 0) d.label = label_from_name((*rec)[static_cast<std::size_t>(c_label)]);
    out.push_back(std::move(d));
  }
  return out;
}

std::map<std::pair<std::string, std::int32_t>, Label> read_labels_csv(std::istream& in) {
  bool ok = true;
  auto head = csv::read_record(in, ok);
  std::map<std::pair<std::string, std::int32_t>, Label> out;
  if (!head) return out;
  csv::Header h(*head);
  const int c_user = h.index("user");
  const int c_date = h.index("date");
  const int c_sc = h.index("scenario");
  if (c_user < 0 || c_date < 0 || c_sc < 0) fail(ErrorCode::MissingColumn, "labels CSV needs user,date,scenario");
  while (auto rec = csv::read_record(in, ok)) {
    if (rec->size() == 1 && trim((*rec)[0]).empty()) continue;
    if (!ok || rec->size() < h.size()) fail(ErrorCode::MalformedRow, "labels CSV row");
    const auto date = Date::parse_iso(trim((*rec)[static_cast<std::size_t>(c_date)]));
    out[{trim((*rec)[static_cast<std::size_t>(c_user)]), date.days}] =
        label_from_name((*rec)[static_cast<std::size_t>(c_sc)]);
  }
  return out;
}

void write_labels_csv(std::ostream& out, const std::map<std::pair<std::string, std::int32_t>, Label>& labels) {
  out << "user,date,scenario\n";
  for (const auto& [key, l] : labels) out << key.first << ',' << Date{key.second}.iso() << ',' << label_name(l) << '\n';
}

}  // namespace chromabehave::features
