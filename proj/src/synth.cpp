#include "chromabehave/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "text_bank.hpp"

namespace chromabehave::synth {

namespace fs = std::filesystem;
using features::Label;
using ingest::EventKind;
using ingest::LogEvent;

std::array<int, 3> derived_scenario_days(int n_users, int n_days) {
  const double user_days = static_cast<double>(n_users) * n_days;
  std::array<int, 3> out{};
  for (int k = 0; k < 3; ++k) out[k] = static_cast<int>(std::ceil(user_days / kScenarioRatio[k]));
  return out;
}

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

using Rng = std::mt19937_64;

int uniform(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
double uniform_real(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
bool chance(Rng& rng, double p) { return std::uniform_real_distribution<double>(0, 1)(rng) < p; }

std::string numbered(const char* prefix, int n, int width = 4) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%0*d", prefix, width, n);
  return buf;
}

const std::array<const char*, 20> kFirst = {"Ada",  "Brent", "Chloe", "Dmitri", "Elena", "Farid", "Grace",
                                            "Hugo", "Irene", "Jonah", "Kara",   "Liam",  "Mona",  "Nils",
                                            "Olive", "Pavel", "Quinn", "Rosa",  "Silas", "Tara"};
const std::array<const char*, 20> kLast = {"Abbott", "Bishop", "Carver", "Dalton", "Ellis",  "Fischer", "Garner",
                                           "Hale",   "Ingram", "Jensen", "Keller", "Lowry",  "Mercer",  "Norris",
                                           "Ortega", "Pryor",  "Quill",  "Rhodes", "Sutton", "Tanaka"};
const std::array<const char*, 4> kDeptRole = {"Engineer", "Salesman", "ITAdmin", "Accountant"};
const std::array<const char*, 4> kDeptName = {"Engineering", "Sales", "IT", "Finance"};
const std::array<const char*, 12> kProjects = {"apollo", "borealis", "cobalt", "delta",  "ember",  "fjord",
                                               "granite", "harbor", "iris",   "juniper", "kestrel", "lumen"};
const std::array<const char*, 5> kDocExt = {".docx", ".xlsx", ".pdf", ".txt", ".pptx"};

struct Mail {
  std::vector<std::string> to;
  int attachments = 0;
  std::int64_t size = 0;
  int body = 0;
};

struct Person {
  int index = 0;
  std::string id;
  std::string name;
  std::string email;
  std::string pc;
  std::string role;
  int team = 0;
  int supervisor = -1;
  // Daily routine
  int start_min = 480;
  int end_min = 1020;
  int lunch_min = -1;
  int devices = 0;
  std::string project;
  std::vector<std::string> files;
  int files_per_day = 4;
  std::vector<Mail> mails;
  std::vector<int> sites;
};

std::string user_dir(const Person& p) { return "C:\\Users\\" + p.id + "\\Documents\\"; }

/// Accumulates one user's events for one day with stable ids.
class DayWriter {
 public:
  DayWriter(std::vector<LogEvent>& sink, const Person& p, int day_index, Date date)
      : sink_(sink), person_(p), day_(day_index), midnight_(DateTime::from_parts(date, 0, 0)) {}

  DateTime at(int minute, int second) const { return DateTime{midnight_.seconds + minute * 60LL + second}; }

  void add(EventKind kind, DateTime ts, const std::string& pc, ingest::Payload payload = {}) {
    static constexpr char kTag[] = {'L', 'O', 'D', 'R', 'F', 'E', 'H'};
    LogEvent e;
    e.event_id = std::string(1, kTag[static_cast<int>(kind)]) + "-" + person_.id + "-" + numbered("", day_, 3) + "-" +
                 numbered("", seq_++, 4);
    e.user = person_.id;
    e.timestamp = ts;
    e.pc = pc;
    e.kind = kind;
    e.payload = std::move(payload);
    sink_.push_back(std::move(e));
  }

 private:
  std::vector<LogEvent>& sink_;
  const Person& person_;
  int day_;
  DateTime midnight_;
  int seq_ = 0;
};

std::string concat_docs(Rng& rng, conical::Topic topic, int max_docs) {
  const auto& docs = text::topic_documents(topic);
  const int n = uniform(rng, 1, max_docs);
  std::string out;
  for (int i = 0; i < n; ++i) {
    if (!out.empty()) out += ' ';
    out += docs[static_cast<std::size_t>(uniform(rng, 0, static_cast<int>(docs.size()) - 1))];
  }
  return out;
}

std::string site_url(int page) { return "http://www." + numbered("infosite", page, 2) + ".com/page"; }

std::vector<Person> build_org(const ScenarioConfig& cfg, Rng& rng) {
  std::vector<Person> people(static_cast<std::size_t>(cfg.n_users));
  const int n_teams = (cfg.n_users + cfg.team_size - 1) / cfg.team_size;
  for (int i = 0; i < cfg.n_users; ++i) {
    auto& p = people[static_cast<std::size_t>(i)];
    p.index = i;
    p.id = numbered("U", i + 1);
    const char* first = kFirst[static_cast<std::size_t>(i % 20)];
    const char* last = kLast[static_cast<std::size_t>((i / 20) % 20)];
    p.name = std::string(first) + " " + last + (i >= 400 ? " " + std::to_string(i / 400 + 1) : "");
    p.email = to_lower(first) + "." + to_lower(last) + (i >= 400 ? std::to_string(i / 400 + 1) : "") + "@" + cfg.domain;
    p.pc = numbered("PC-", i + 1);
    p.team = i / cfg.team_size;
    const bool lead = i % cfg.team_size == 0;
    p.role = lead ? "Manager" : kDeptRole[static_cast<std::size_t>(p.team % 4)];
    p.supervisor = lead ? (i == 0 ? -1 : 0) : p.team * cfg.team_size;
  }
  (void)n_teams;

  for (auto& p : people) {
    const bool manager = p.role == "Manager";
    const auto dept = static_cast<std::size_t>(p.team % 4);
    // Base start in [07:20, 09:30]; jitter stays clear of the 07:00 boundary.
    int lo = 480, hi = 570;
    if (p.role == "Salesman") lo = 450, hi = 540;
    if (p.role == "ITAdmin") lo = 440, hi = 510;
    if (p.role == "Accountant") lo = 480, hi = 540;
    if (manager) lo = 460, hi = 525;
    p.start_min = uniform(rng, lo, hi);
    p.end_min = std::min(p.start_min + uniform(rng, 480, 540), 1115);
    p.lunch_min = chance(rng, 0.5) ? uniform(rng, 720, 750) : -1;
    p.devices = (p.role == "Engineer" ? 1 : p.role == "ITAdmin" ? 2 : 0) + (chance(rng, 0.3) ? 1 : 0);

    p.project = kProjects[static_cast<std::size_t>(uniform(rng, 0, static_cast<int>(kProjects.size()) - 1))];
    for (int k = 0; k < 12; ++k) {
      const char* ext = p.role == "ITAdmin" && k % 3 == 0 ? ".ps1" : kDocExt[static_cast<std::size_t>(k % 5)];
      p.files.push_back(user_dir(p) + p.project + "\\" + p.project + "_" + numbered("", k + 1, 2) + ext);
    }
    p.files_per_day = manager ? uniform(rng, 2, 4) : uniform(rng, 3, 7);

    // Teammates (and the lead) are the usual internal recipients.
    std::vector<int> mates;
    const int team_lo = p.team * cfg.team_size;
    const int team_hi = std::min(team_lo + cfg.team_size, cfg.n_users);
    for (int j = team_lo; j < team_hi; ++j)
      if (j != p.index) mates.push_back(j);
    if (mates.empty() && p.supervisor >= 0) mates.push_back(p.supervisor);

    int n_mail = 3;
    switch (dept) {
      case 0: n_mail = uniform(rng, 3, 5); break;
      case 1: n_mail = uniform(rng, 5, 8); break;
      case 2: n_mail = uniform(rng, 2, 4); break;
      default: n_mail = uniform(rng, 3, 6); break;
    }
    if (manager) n_mail = uniform(rng, 6, 9);
    const double external_share = p.role == "Salesman" ? 0.4 : 0.05;
    for (int m = 0; m < n_mail; ++m) {
      Mail mail;
      if (!mates.empty() && !chance(rng, external_share)) {
        const int k = uniform(rng, 1, std::min<int>(3, static_cast<int>(mates.size())));
        std::vector<int> pick = mates;
        std::shuffle(pick.begin(), pick.end(), rng);
        for (int r = 0; r < k; ++r) mail.to.push_back(people[static_cast<std::size_t>(pick[static_cast<std::size_t>(r)])].email);
      } else {
        mail.to.push_back(numbered("contact", uniform(rng, 1, 60), 2) + "@" + numbered("client", uniform(rng, 1, 15), 2) +
                          ".com");
      }
      mail.attachments = chance(rng, 0.3) ? 1 : 0;
      mail.size = uniform(rng, 8000, 40000) + mail.attachments * uniform(rng, 100000, 400000);
      mail.body = uniform(rng, 0, static_cast<int>(text::benign_emails().size()) - 1);
      p.mails.push_back(std::move(mail));
    }

    std::vector<int> pages(text::benign_pages().size());
    std::iota(pages.begin(), pages.end(), 0);
    std::shuffle(pages.begin(), pages.end(), rng);
    pages.resize(static_cast<std::size_t>(uniform(rng, 4, 9)));
    std::sort(pages.begin(), pages.end());
    p.sites = std::move(pages);
  }
  return people;
}

/// k sorted day indices in [lo, hi] pairwise at least `gap` apart.
std::vector<int> spaced_days(Rng& rng, int k, int lo, int hi, int gap) {
  const int span = (hi - lo + 1) - (k - 1) * (gap - 1);
  if (k <= 0) return {};
  if (span < k) fail(ErrorCode::ConfigInfeasible, "not enough days for " + std::to_string(k) + " spaced attacks");
  std::vector<int> slots(static_cast<std::size_t>(span));
  std::iota(slots.begin(), slots.end(), 0);
  std::shuffle(slots.begin(), slots.end(), rng);
  slots.resize(static_cast<std::size_t>(k));
  std::sort(slots.begin(), slots.end());
  for (int i = 0; i < k; ++i) slots[static_cast<std::size_t>(i)] += lo + i * (gap - 1);
  return slots;
}

struct Plan {
  int person = 0;
  Label scenario = Label::Benign;
  std::vector<int> days;
};

std::vector<Plan> plan_attacks(const ScenarioConfig& cfg, const std::vector<Person>& people, Rng& rng) {
  std::array<int, 3> counts = cfg.scenario_days;
  const auto derived = derived_scenario_days(cfg.n_users, cfg.n_days);
  for (int k = 0; k < 3; ++k)
    if (counts[k] < 0) counts[k] = derived[k];

  const long total = static_cast<long>(counts[0]) + counts[1] + counts[2];
  if (total > static_cast<long>(cfg.n_users) * cfg.n_days)
    fail(ErrorCode::ConfigInfeasible, "more attack days than user-days");

  std::vector<int> pool;
  for (const auto& p : people)
    if (p.role != "Manager" && p.supervisor >= 0) pool.push_back(p.index);
  std::shuffle(pool.begin(), pool.end(), rng);
  std::vector<bool> taken(people.size(), false);

  std::vector<Plan> plans;
  // Scenario 3 first: it needs administrators.
  for (int k : {2, 0, 1}) {
    const int days = counts[static_cast<std::size_t>(k)];
    if (days == 0) continue;
    const int per = std::max(1, cfg.days_per_insider[static_cast<std::size_t>(k)]);
    const int n_insiders = std::max(1, (days + per / 2) / per);
    for (int i = 0; i < n_insiders; ++i) {
      const int share = days / n_insiders + (i < days % n_insiders ? 1 : 0);
      if (share == 0) continue;
      auto it = std::find_if(pool.begin(), pool.end(), [&](int u) {
        return !taken[static_cast<std::size_t>(u)] && (k != 2 || people[static_cast<std::size_t>(u)].role == "ITAdmin");
      });
      if (it == pool.end())
        fail(ErrorCode::ConfigInfeasible, "not enough eligible insiders for scenario " + std::to_string(k + 1));
      taken[static_cast<std::size_t>(*it)] = true;
      Plan plan;
      plan.person = *it;
      plan.scenario = static_cast<Label>(k + 1);
      // Short corpora move the quiet lead-in forward so attacks still fit.
      const int first = std::clamp(cfg.first_attack_day, 0, cfg.n_days / 2);
      plan.days = spaced_days(rng, share, first, cfg.n_days - 1, cfg.attack_gap);
      plans.push_back(std::move(plan));
    }
  }
  return plans;
}

void routine_day(DayWriter& w, const Person& p, Rng& rng) {
  auto jitter = [&](int base) { return base + std::clamp(static_cast<int>(std::lround(std::normal_distribution<double>(0, 4)(rng))), -10, 10); };
  const int start = jitter(p.start_min);
  const int end = jitter(p.end_min);
  auto when = [&] { return w.at(uniform(rng, start + 5, end - 5), uniform(rng, 0, 59)); };

  w.add(EventKind::Logon, w.at(start, uniform(rng, 0, 59)), p.pc);
  if (p.lunch_min >= 0) {
    const int out = jitter(p.lunch_min);
    w.add(EventKind::Logoff, w.at(out, uniform(rng, 0, 59)), p.pc);
    w.add(EventKind::Logon, w.at(out + 40, uniform(rng, 0, 59)), p.pc);
  }
  w.add(EventKind::Logoff, w.at(end, uniform(rng, 0, 59)), p.pc);

  for (int d = 0; d < p.devices; ++d) {
    const int t = uniform(rng, start + 10, end - 40);
    w.add(EventKind::DeviceConnect, w.at(t, uniform(rng, 0, 59)), p.pc);
    w.add(EventKind::DeviceDisconnect, w.at(t + uniform(rng, 5, 30), uniform(rng, 0, 59)), p.pc);
  }

  int n_files = p.files_per_day;
  if (chance(rng, 0.2)) n_files += chance(rng, 0.5) ? 1 : -1;
  std::vector<std::size_t> order(p.files.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  for (int f = 0; f < std::clamp(n_files, 1, static_cast<int>(p.files.size())); ++f) {
    const auto& path = p.files[order[static_cast<std::size_t>(f)]];
    w.add(EventKind::FileAccess, when(), p.pc, ingest::FileAccess{path, path.substr(path.rfind('\\') + 1)});
  }

  for (const auto& mail : p.mails) {
    if (!chance(rng, 0.93)) continue;
    ingest::EmailSend m;
    m.to = mail.to;
    m.from = p.email;
    m.size_bytes = static_cast<std::int64_t>(std::llround(static_cast<double>(mail.size) * uniform_real(rng, 0.97, 1.03)));
    m.attachments = mail.attachments;
    m.body = text::benign_emails()[static_cast<std::size_t>(mail.body)];
    w.add(EventKind::EmailSend, when(), p.pc, std::move(m));
  }

  for (int page : p.sites) {
    if (!chance(rng, 0.9)) continue;
    w.add(EventKind::HttpVisit, when(), p.pc,
          ingest::HttpVisit{site_url(page), text::benign_pages()[static_cast<std::size_t>(page)]});
  }
}

void benign_irregularities(DayWriter& w, const Person& p, const ScenarioConfig& cfg, Rng& rng) {
  if (chance(rng, cfg.late_work_rate)) {
    const int t = uniform(rng, 1170, 1260);
    w.add(EventKind::Logon, w.at(t, uniform(rng, 0, 59)), p.pc);
    for (int f = uniform(rng, 1, 3); f > 0; --f) {
      const auto& path = p.files[static_cast<std::size_t>(uniform(rng, 0, static_cast<int>(p.files.size()) - 1))];
      w.add(EventKind::FileAccess, w.at(t + uniform(rng, 2, 25), uniform(rng, 0, 59)), p.pc,
            ingest::FileAccess{path, path.substr(path.rfind('\\') + 1)});
    }
    w.add(EventKind::Logoff, w.at(t + uniform(rng, 30, 90), uniform(rng, 0, 59)), p.pc);
  }
  if (chance(rng, cfg.job_browse_rate)) {
    const auto& docs = text::topic_documents(conical::Topic::JobSite);
    const int k = uniform(rng, 0, static_cast<int>(docs.size()) - 1);
    w.add(EventKind::HttpVisit, w.at(uniform(rng, p.start_min + 30, p.end_min - 30), uniform(rng, 0, 59)), p.pc,
          ingest::HttpVisit{"http://www.careerboard.com/listing/" + std::to_string(k), docs[static_cast<std::size_t>(k)]});
  }
  if (chance(rng, cfg.usb_burst_rate)) {
    for (int d = 0; d < 2; ++d) {
      const int t = uniform(rng, p.start_min + 15, p.end_min - 45);
      w.add(EventKind::DeviceConnect, w.at(t, uniform(rng, 0, 59)), p.pc);
      w.add(EventKind::DeviceDisconnect, w.at(t + uniform(rng, 5, 20), uniform(rng, 0, 59)), p.pc);
    }
  }
}

// After-hours sweep across colleagues' machines, removable media and leak sites.
void scenario1_day(DayWriter& w, const Person& p, const std::vector<Person>& people, Rng& rng) {
  int t = uniform(rng, 1200, 1290);
  w.add(EventKind::Logon, w.at(t, uniform(rng, 0, 59)), p.pc);
  const int device_t = t + uniform(rng, 3, 10);
  for (int d = uniform(rng, 1, 2); d > 0; --d) {
    w.add(EventKind::DeviceConnect, w.at(device_t, uniform(rng, 0, 59)), p.pc);
    w.add(EventKind::DeviceDisconnect, w.at(device_t + uniform(rng, 60, 120), uniform(rng, 0, 59)), p.pc);
  }
  for (int v = uniform(rng, 2, 3); v > 0; --v) {
    w.add(EventKind::HttpVisit, w.at(t + uniform(rng, 5, 20), uniform(rng, 0, 59)), p.pc,
          ingest::HttpVisit{"http://wikileaks.org/submit/" + std::to_string(uniform(rng, 100, 999)),
                            concat_docs(rng, conical::Topic::Wikileaks, 3)});
  }
  const int victims = uniform(rng, 2, 3);
  for (int v = 0; v < victims; ++v) {
    const auto& other = people[static_cast<std::size_t>(uniform(rng, 0, static_cast<int>(people.size()) - 1))];
    if (other.index == p.index) continue;
    t += uniform(rng, 8, 15);
    w.add(EventKind::Logon, w.at(t, uniform(rng, 0, 59)), other.pc);
    for (int f = uniform(rng, 3, 8); f > 0; --f) {
      const auto& path = other.files[static_cast<std::size_t>(uniform(rng, 0, static_cast<int>(other.files.size()) - 1))];
      w.add(EventKind::FileAccess, w.at(t + uniform(rng, 1, 15), uniform(rng, 0, 59)), other.pc,
            ingest::FileAccess{path, path.substr(path.rfind('\\') + 1)});
    }
    t += uniform(rng, 20, 35);
    w.add(EventKind::Logoff, w.at(t, uniform(rng, 0, 59)), other.pc);
  }
  w.add(EventKind::Logoff, w.at(std::min(t + uniform(rng, 5, 20), 1438), uniform(rng, 0, 59)), p.pc);
}

// Job hunting with data taken out on removable media and personal mail.
void scenario2_day(DayWriter& w, const Person& p, const std::vector<Person>& people, Rng& rng) {
  const double intensity = uniform_real(rng, 0.3, 1.0);
  auto office = [&] { return w.at(uniform(rng, p.start_min + 20, p.end_min - 20), uniform(rng, 0, 59)); };
  const int visits = 1 + static_cast<int>(std::lround(4 * intensity));
  for (int v = 0; v < visits; ++v) {
    w.add(EventKind::HttpVisit, office(), p.pc,
          ingest::HttpVisit{"http://www.jobhunter.com/apply/" + std::to_string(uniform(rng, 1000, 9999)),
                            concat_docs(rng, conical::Topic::JobSite, 2)});
  }
  const int devices = 1 + static_cast<int>(std::lround(2 * intensity));
  for (int d = 0; d < devices; ++d) {
    const int t = uniform(rng, p.start_min + 20, p.end_min - 40);
    w.add(EventKind::DeviceConnect, w.at(t, uniform(rng, 0, 59)), p.pc);
    w.add(EventKind::DeviceDisconnect, w.at(t + uniform(rng, 10, 30), uniform(rng, 0, 59)), p.pc);
  }
  // Files from other projects and department shares.
  const int extra = 4 + static_cast<int>(std::lround(12 * intensity));
  const auto& dept = kDeptName[static_cast<std::size_t>(p.team % 4)];
  for (int f = 0; f < extra; ++f) {
    std::string path;
    if (f % 2 == 0) {
      const char* proj = kProjects[static_cast<std::size_t>(uniform(rng, 0, static_cast<int>(kProjects.size()) - 1))];
      path = std::string("C:\\Shared\\") + dept + "\\" + proj + "\\" + numbered("record_", uniform(rng, 1, 99), 2) + ".xlsx";
    } else {
      const auto& mate = people[static_cast<std::size_t>(uniform(rng, 0, static_cast<int>(people.size()) - 1))];
      path = "C:\\Archive\\" + mate.project + "\\" + numbered("spec_", uniform(rng, 1, 99), 2) + ".docx";
    }
    w.add(EventKind::FileAccess, office(), p.pc, ingest::FileAccess{path, path.substr(path.rfind('\\') + 1)});
  }
  const int mails = 1 + static_cast<int>(std::lround(2 * intensity));
  std::string personal = to_lower(p.name);
  std::replace(personal.begin(), personal.end(), ' ', '.');
  for (int m = 0; m < mails; ++m) {
    ingest::EmailSend e;
    e.to = {personal + "@freemail.net"};
    e.from = p.email;
    e.attachments = uniform(rng, 1, 3);
    e.size_bytes = uniform(rng, 500000, 3000000);
    e.body = text::benign_emails()[static_cast<std::size_t>(uniform(rng, 0, static_cast<int>(text::benign_emails().size()) - 1))];
    w.add(EventKind::EmailSend, office(), p.pc, std::move(e));
  }
}

// Keylogger on the supervisor's machine and a mass mail in their name.
void scenario3_day(DayWriter& w, const Person& boss, const std::vector<Person>& people, Rng& rng) {
  int t = uniform(rng, 1200, 1320);
  w.add(EventKind::Logon, w.at(t, uniform(rng, 0, 59)), boss.pc);
  for (int v = uniform(rng, 1, 2); v > 0; --v) {
    w.add(EventKind::HttpVisit, w.at(t + uniform(rng, 1, 6), uniform(rng, 0, 59)), boss.pc,
          ingest::HttpVisit{"http://www.keylog-tools.net/download/" + std::to_string(uniform(rng, 10, 99)),
                            concat_docs(rng, conical::Topic::Keylogger, 2)});
  }
  const std::string temp = "C:\\Users\\" + boss.id + "\\AppData\\Local\\Temp\\";
  w.add(EventKind::FileAccess, w.at(t + 8, uniform(rng, 0, 59)), boss.pc, ingest::FileAccess{temp + "keylogger.exe", "keylogger.exe"});
  for (int e = uniform(rng, 1, 2); e > 0; --e) {
    const std::string name = numbered("svc_helper", uniform(rng, 1, 99), 2) + ".exe";
    w.add(EventKind::FileAccess, w.at(t + 9, uniform(rng, 0, 59)), boss.pc, ingest::FileAccess{temp + name, name});
  }
  ingest::EmailSend mail;
  std::vector<int> everyone(people.size());
  std::iota(everyone.begin(), everyone.end(), 0);
  std::shuffle(everyone.begin(), everyone.end(), rng);
  const int n_to = std::min<int>(uniform(rng, 20, 40), static_cast<int>(people.size()) - 1);
  for (int i : everyone) {
    if (static_cast<int>(mail.to.size()) >= n_to) break;
    if (i == boss.index) continue;
    mail.to.push_back(people[static_cast<std::size_t>(i)].email);
  }
  mail.from = boss.email;
  mail.body = concat_docs(rng, conical::Topic::Disgruntled, 2);
  mail.size_bytes = static_cast<std::int64_t>(mail.body.size()) + uniform(rng, 2000, 6000);
  w.add(EventKind::EmailSend, w.at(t + uniform(rng, 12, 20), uniform(rng, 0, 59)), boss.pc, std::move(mail));
  t += uniform(rng, 30, 60);
  w.add(EventKind::Logoff, w.at(t, uniform(rng, 0, 59)), boss.pc);
}

}  // namespace

Corpus generate(const ScenarioConfig& cfg) {
  if (cfg.n_users < 10 || cfg.n_days < 10 || cfg.team_size < 2)
    fail(ErrorCode::ConfigInfeasible, "need at least 10 users, 10 days and teams of two");
  if (cfg.attack_gap < 1) fail(ErrorCode::ConfigInfeasible, "attack gap must be positive");

  Rng org_rng(splitmix(cfg.seed));
  const auto people = build_org(cfg, org_rng);
  Rng plan_rng(splitmix(cfg.seed ^ 0x5eedf00dULL));
  const auto plans = plan_attacks(cfg, people, plan_rng);

  Corpus corpus;
  std::map<std::pair<int, int>, Label> attacks;
  for (const auto& plan : plans) {
    Insider ins;
    ins.user = people[static_cast<std::size_t>(plan.person)].id;
    ins.scenario = plan.scenario;
    for (int d : plan.days) {
      attacks[{plan.person, d}] = plan.scenario;
      ins.days.push_back(cfg.start + d);
    }
    corpus.insiders.push_back(std::move(ins));
  }

  for (const auto& p : people) {
    Rng rng(splitmix(cfg.seed + 0x1000ULL * static_cast<std::uint64_t>(p.index + 1)));
    for (int d = 0; d < cfg.n_days; ++d) {
      const Date date = cfg.start + d;
      DayWriter w(corpus.events, p, d, date);
      routine_day(w, p, rng);
      benign_irregularities(w, p, cfg, rng);
      Label label = Label::Benign;
      if (auto it = attacks.find({p.index, d}); it != attacks.end()) {
        label = it->second;
        // Attack randomness comes from its own stream so benign days stay
        // identical whether or not an attack is planted.
        Rng attack_rng(splitmix(cfg.seed ^ (0xa77acULL * static_cast<std::uint64_t>(p.index + 1) + static_cast<std::uint64_t>(d))));
        switch (label) {
          case Label::Scenario1: scenario1_day(w, p, people, attack_rng); break;
          case Label::Scenario2: scenario2_day(w, p, people, attack_rng); break;
          case Label::Scenario3:
            scenario3_day(w, people[static_cast<std::size_t>(p.supervisor)], people, attack_rng);
            break;
          case Label::Benign: break;
        }
      }
      corpus.labels[{p.id, date.days}] = label;
    }
  }

  Rng ocean_rng(splitmix(cfg.seed ^ 0x0ceaULL));
  for (const auto& p : people) {
    ingest::LdapRecord r;
    r.user = p.id;
    r.employee_name = p.name;
    r.email = p.email;
    r.role = p.role;
    r.team = std::string(kDeptName[static_cast<std::size_t>(p.team % 4)]) + "-" + numbered("", p.team + 1, 2);
    r.supervisor = p.supervisor >= 0 ? people[static_cast<std::size_t>(p.supervisor)].id : "";
    for (auto& o : r.ocean) o = std::round(uniform_real(ocean_rng, 0.15, 0.85) * 1e4) / 1e4;
    r.employed_from = cfg.start;
    corpus.ldap.push_back(std::move(r));
  }
  return corpus;
}

const std::vector<std::string>& seed_documents(conical::Topic topic) { return text::topic_documents(topic); }

ingest::FrequencyDict seed_dictionary() {
  std::ostringstream text_out;
  for (const auto& [word, count] : text::word_counts()) text_out << word << ',' << count << '\n';
  std::istringstream in(text_out.str());
  return ingest::load_word_frequencies(in);
}

void write_seed_corpora(const fs::path& corpora_dir) {
  for (auto topic : conical::kAllTopics) {
    const auto dir = corpora_dir / std::string(conical::topic_name(topic));
    fs::create_directories(dir);
    const auto& docs = text::topic_documents(topic);
    for (std::size_t i = 0; i < docs.size(); ++i) {
      std::ofstream out(dir / (numbered("", static_cast<int>(i + 1), 2) + ".txt"), std::ios::binary);
      out << docs[i] << '\n';
      if (!out) fail(ErrorCode::Io, "cannot write " + dir.string());
    }
  }
}

void write_word_frequencies(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << "word,count\n";
  for (const auto& [word, count] : text::word_counts()) out << word << ',' << count << '\n';
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
}

void write_corpus(const Corpus& corpus, const ScenarioConfig& cfg, const fs::path& out) {
  fs::create_directories(out);
  ingest::EventStore(corpus.events).save_dir(out);

  const auto ldap_dir = out / "LDAP";
  fs::create_directories(ldap_dir);
  const Date last = cfg.start + (cfg.n_days - 1);
  for (int y = cfg.start.year(), m = static_cast<int>(cfg.start.month());
       y < last.year() || (y == last.year() && m <= static_cast<int>(last.month()));) {
    char stem[16];
    std::snprintf(stem, sizeof stem, "%04d-%02d", y, m);
    std::ofstream snap(ldap_dir / (std::string(stem) + ".csv"), std::ios::binary);
    ingest::write_ldap_snapshot(snap, corpus.ldap);
    if (++m > 12) m = 1, ++y;
  }
  {
    std::ofstream psy(out / "psychometric.csv", std::ios::binary);
    ingest::write_psychometric(psy, corpus.ldap);
    std::ofstream labels(out / "labels.csv", std::ios::binary);
    features::write_labels_csv(labels, corpus.labels);
    if (!psy || !labels) fail(ErrorCode::Io, "cannot write into " + out.string());
  }
  write_seed_corpora(out / "corpora");
  write_word_frequencies(out / "word_freq.csv");
}

namespace {

/// Largest-remainder apportionment of n over the three ratios; ties prefer
/// test, then val, then train.
std::array<std::size_t, 3> apportion(std::size_t n, const std::array<double, 3>& ratio) {
  std::array<std::size_t, 3> out{};
  std::array<double, 3> frac{};
  std::size_t used = 0;
  for (int j = 0; j < 3; ++j) {
    const double exact = static_cast<double>(n) * ratio[static_cast<std::size_t>(j)];
    out[static_cast<std::size_t>(j)] = static_cast<std::size_t>(std::floor(exact + 1e-9));
    frac[static_cast<std::size_t>(j)] = exact - static_cast<double>(out[static_cast<std::size_t>(j)]);
    used += out[static_cast<std::size_t>(j)];
  }
  std::array<int, 3> order = {2, 1, 0};
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return frac[static_cast<std::size_t>(a)] > frac[static_cast<std::size_t>(b)] + 1e-12; });
  for (std::size_t i = 0; used < n; ++i, ++used) ++out[static_cast<std::size_t>(order[i % 3])];
  return out;
}

}  // namespace

Splits stratified_split(std::span<const Label> labels, const SplitSpec& spec) {
  const std::array<double, 3> ratio = {spec.train, spec.val, spec.test};
  for (double r : ratio)
    if (!(r >= 0)) fail(ErrorCode::InvalidArgument, "split ratios must be non-negative");
  if (std::abs(ratio[0] + ratio[1] + ratio[2] - 1.0) > 1e-9) fail(ErrorCode::InvalidArgument, "split ratios must sum to 1");

  std::vector<std::size_t> benign;
  std::map<Label, std::vector<std::size_t>> by_scenario;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (features::is_malicious(labels[i])) by_scenario[labels[i]].push_back(i);
    else benign.push_back(i);
  }
  std::size_t n_mal = 0;
  for (const auto& [s, items] : by_scenario) n_mal += items.size();
  if (benign.size() < spec.min_per_class || n_mal < spec.min_per_class)
    fail(ErrorCode::TooFewItems, "each class needs at least " + std::to_string(spec.min_per_class) + " items");

  Rng rng(splitmix(spec.seed));
  Splits out;
  auto deal = [&](const std::vector<std::size_t>& items, const std::array<std::size_t, 3>& counts) {
    std::size_t k = 0;
    for (std::size_t j = 0; j < 3; ++j) {
      auto& dst = j == 0 ? out.train : j == 1 ? out.val : out.test;
      for (std::size_t c = 0; c < counts[j]; ++c) dst.push_back(items[k++]);
    }
  };

  std::shuffle(benign.begin(), benign.end(), rng);
  deal(benign, apportion(benign.size(), ratio));

  // Malicious: split-level quotas, then per-scenario floors, then remainders.
  const auto quota = apportion(n_mal, ratio);
  std::array<long, 3> room{};
  for (std::size_t j = 0; j < 3; ++j) room[j] = static_cast<long>(quota[j]);
  std::map<Label, std::array<std::size_t, 3>> counts;
  std::map<Label, std::size_t> left;
  struct Candidate {
    Label scenario;
    int split;
    double frac;
  };
  std::vector<Candidate> candidates;
  for (auto& [s, items] : by_scenario) {
    std::shuffle(items.begin(), items.end(), rng);
    auto& c = counts[s];
    std::size_t assigned = 0;
    for (int j = 0; j < 3; ++j) {
      const double exact = static_cast<double>(items.size()) * ratio[static_cast<std::size_t>(j)];
      c[static_cast<std::size_t>(j)] = static_cast<std::size_t>(std::floor(exact + 1e-9));
      room[static_cast<std::size_t>(j)] -= static_cast<long>(c[static_cast<std::size_t>(j)]);
      assigned += c[static_cast<std::size_t>(j)];
      candidates.push_back({s, j, exact - static_cast<double>(c[static_cast<std::size_t>(j)])});
    }
    left[s] = items.size() - assigned;
  }
  std::stable_sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (std::abs(a.frac - b.frac) > 1e-12) return a.frac > b.frac;
    return a.split > b.split;  // test, then val, then train
  });
  for (const auto& cand : candidates) {
    const auto j = static_cast<std::size_t>(cand.split);
    if (cand.frac <= 1e-12 || left[cand.scenario] == 0 || room[j] <= 0) continue;
    ++counts[cand.scenario][j];
    --left[cand.scenario];
    --room[j];
  }
  for (auto& [s, n] : left) {
    for (std::size_t j : {2u, 1u, 0u}) {
      while (n > 0 && room[j] > 0) {
        ++counts[s][j];
        --n;
        --room[j];
      }
    }
  }
  for (const auto& [s, items] : by_scenario) deal(items, counts[s]);

  std::sort(out.train.begin(), out.train.end());
  std::sort(out.val.begin(), out.val.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

Splits unseen_attack_protocol(const Splits& splits, std::span<const Label> labels, const std::set<Label>& held_out) {
  Splits out;
  out.test = splits.test;
  auto keep = [&](const std::vector<std::size_t>& from, std::vector<std::size_t>& to) {
    for (std::size_t i : from) {
      if (i >= labels.size()) fail(ErrorCode::InvalidArgument, "split index out of range");
      if (!held_out.count(labels[i])) to.push_back(i);
    }
  };
  keep(splits.train, out.train);
  keep(splits.val, out.val);
  return out;
}

}  // namespace chromabehave::synth
