#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "chromabehave/pipeline.hpp"
#include "chromabehave/synth.hpp"
#include "doctest.h"

using namespace chromabehave;
using namespace chromabehave::synth;
using features::Label;
namespace fs = std::filesystem;

namespace {

ScenarioConfig small_config() {
  ScenarioConfig c;
  c.n_users = 40;
  c.n_days = 60;
  c.seed = 11;
  c.scenario_days = {6, 20, 2};
  return c;
}

const Corpus& small_corpus() {
  static const Corpus c = generate(small_config());
  return c;
}

std::map<std::string, std::string> read_tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    out[fs::relative(e.path(), root).generic_string()] = ss.str();
  }
  return out;
}

std::size_t count_label(const LabelMap& labels, Label l) {
  return static_cast<std::size_t>(
      std::count_if(labels.begin(), labels.end(), [&](const auto& kv) { return kv.second == l; }));
}

std::vector<Label> label_list(int benign, std::array<int, 3> per_scenario) {
  std::vector<Label> out(static_cast<std::size_t>(benign), Label::Benign);
  const Label s[] = {Label::Scenario1, Label::Scenario2, Label::Scenario3};
  for (int k = 0; k < 3; ++k) out.insert(out.end(), static_cast<std::size_t>(per_scenario[static_cast<std::size_t>(k)]), s[k]);
  // interleave so positions carry no information
  std::vector<Label> mixed;
  for (std::size_t i = 0; i < out.size(); ++i) mixed.push_back(out[(i * 7919) % out.size()]);
  return mixed;
}

double relative_change(const features::FeatureVector& a, const features::FeatureVector& b) {
  double s = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double den = std::abs(a[k]) + std::abs(b[k]);
    if (den > 0) s += std::abs(a[k] - b[k]) / den;
  }
  return s / static_cast<double>(a.size());
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

TEST_CASE("derived scenario counts follow the reference ratios") {
  CHECK(derived_scenario_days(200, 120) == std::array<int, 3>{7, 63, 2});
  CHECK(derived_scenario_days(10, 10) == std::array<int, 3>{1, 1, 1});
}

TEST_CASE("default configuration hits the configured malicious fraction") {
  const ScenarioConfig cfg;
  const auto c = generate(cfg);
  const auto target = derived_scenario_days(cfg.n_users, cfg.n_days);
  const Label s[] = {Label::Scenario1, Label::Scenario2, Label::Scenario3};
  double expected = 0, got = 0;
  for (int k = 0; k < 3; ++k) {
    expected += target[static_cast<std::size_t>(k)];
    got += static_cast<double>(count_label(c.labels, s[k]));
  }
  CHECK(got >= 0.8 * expected);
  CHECK(got <= 1.2 * expected);
  CHECK(got / static_cast<double>(c.labels.size()) < 0.01);
}

TEST_CASE("infeasible configurations are rejected") {
  auto tiny = small_config();
  tiny.n_users = 5;
  CHECK_THROWS_AS(generate(tiny), Error);
  auto crowded = small_config();
  crowded.scenario_days = {40 * 60 + 1, 0, 0};
  try {
    generate(crowded);
    FAIL("expected ConfigInfeasible");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ConfigInfeasible);
  }
}

TEST_CASE("every attack day is labeled with its scenario and insiders match labels") {
  const auto& c = small_corpus();
  CHECK(count_label(c.labels, Label::Scenario1) == 6);
  CHECK(count_label(c.labels, Label::Scenario2) == 20);
  CHECK(count_label(c.labels, Label::Scenario3) == 2);
  for (const auto& ins : c.insiders) {
    for (const auto& d : ins.days) {
      const auto it = c.labels.find({ins.user, d.days});
      REQUIRE(it != c.labels.end());
      CHECK(it->second == ins.scenario);
    }
  }
}

TEST_CASE("scenario-3 days show the keylogger and spoofed after-hours mail pattern") {
  const auto& c = small_corpus();
  std::map<std::string, std::string> email_of;
  for (const auto& r : c.ldap) email_of[r.user] = r.email;
  int checked = 0;
  for (const auto& [key, label] : c.labels) {
    if (label != Label::Scenario3) continue;
    const auto& [user, day] = key;
    bool keylog_site = false, exe = false, spoof = false;
    for (const auto& e : c.events) {
      if (e.user != user || e.timestamp.date().days != day) continue;
      if (const auto* h = std::get_if<ingest::HttpVisit>(&e.payload)) keylog_site |= h->url.find("keylog") != std::string::npos;
      if (const auto* f = std::get_if<ingest::FileAccess>(&e.payload))
        exe |= f->filename.size() > 4 && f->filename.substr(f->filename.size() - 4) == ".exe";
      if (const auto* m = std::get_if<ingest::EmailSend>(&e.payload)) {
        const double minute = e.timestamp.minute_of_day();
        const bool after_hours = minute >= 18 * 60 || minute < 6 * 60;
        spoof |= after_hours && m->from != email_of[user] && m->to.size() >= 5;
      }
    }
    CHECK(keylog_site);
    CHECK(exe);
    CHECK(spoof);
    ++checked;
  }
  CHECK(checked == 2);
}

TEST_CASE("generator output is byte-identical per seed and parses without malformed rows") {
  const auto a = fs::temp_directory_path() / "cb_synth_a";
  const auto b = fs::temp_directory_path() / "cb_synth_b";
  fs::remove_all(a);
  fs::remove_all(b);
  write_corpus(small_corpus(), small_config(), a);
  write_corpus(generate(small_config()), small_config(), b);
  CHECK(read_tree(a) == read_tree(b));

  ingest::EventStore::LoadReport rep;
  const auto store = ingest::EventStore::load_dir(a, {}, &rep);
  CHECK(rep.errors.empty());
  CHECK(store.events().size() == small_corpus().events.size());
  const auto ldap = ingest::load_ldap_dir(a / "LDAP", a / "psychometric.csv");
  CHECK(ldap.size() == 40);

  auto other = small_config();
  other.seed = 12;
  CHECK(generate(other).events.size() != small_corpus().events.size());
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("benign days are stable day over day compared with attack days") {
  const auto& c = small_corpus();
  const ingest::EventStore store(c.events);
  const auto detectors = pipeline::fit_seed_detectors();
  const auto days = features::extract_all(store, c.ldap, detectors, {}, c.labels);
  std::vector<double> benign, attack;
  for (std::size_t i = 1; i < days.size(); ++i) {
    const auto& prev = days[i - 1];
    const auto& cur = days[i];
    if (prev.day.user != cur.day.user || prev.malicious()) continue;
    (cur.malicious() ? attack : benign).push_back(relative_change(prev.day.f, cur.day.f));
  }
  REQUIRE(attack.size() >= 10);
  CHECK(median(benign) < median(attack));
}

TEST_CASE("stratified split of 100 benign and 10 malicious") {
  const auto labels = label_list(100, {0, 10, 0});
  const SplitSpec spec;
  const auto s = stratified_split(labels, spec);
  auto count = [&](const std::vector<std::size_t>& idx) {
    std::size_t m = 0;
    for (auto i : idx) m += features::is_malicious(labels[i]);
    return std::pair{idx.size() - m, m};
  };
  CHECK(count(s.test) == std::pair<std::size_t, std::size_t>{20, 2});
  CHECK(count(s.val) == std::pair<std::size_t, std::size_t>{10, 1});
  CHECK(count(s.train) == std::pair<std::size_t, std::size_t>{70, 7});

  const auto again = stratified_split(labels, spec);
  CHECK(again.train == s.train);
  CHECK(again.val == s.val);
  CHECK(again.test == s.test);

  std::vector<std::size_t> all;
  for (const auto* part : {&s.train, &s.val, &s.test}) all.insert(all.end(), part->begin(), part->end());
  std::sort(all.begin(), all.end());
  std::vector<std::size_t> expected(labels.size());
  std::iota(expected.begin(), expected.end(), std::size_t{0});
  CHECK(all == expected);
}

TEST_CASE("property: split quotas stay within one item of exact stratification") {
  for (int benign = 20; benign < 400; benign += 37) {
    for (int mal = 10; mal < 60; mal += 13) {
      const auto labels = label_list(benign, {mal / 3, mal - 2 * (mal / 3), mal / 3});
      SplitSpec spec;
      spec.seed = static_cast<std::uint64_t>(benign * 100 + mal);
      const auto s = stratified_split(labels, spec);
      const double ratio[] = {0.7, 0.1, 0.2};
      const std::vector<std::size_t>* parts[] = {&s.train, &s.val, &s.test};
      std::size_t total = 0;
      for (int k = 0; k < 3; ++k) {
        std::size_t m = 0;
        for (auto i : *parts[k]) m += features::is_malicious(labels[i]);
        CHECK(std::abs(static_cast<double>(m) - ratio[k] * mal) <= 1.0);
        CHECK(std::abs(static_cast<double>(parts[k]->size() - m) - ratio[k] * benign) <= 1.0);
        total += parts[k]->size();
      }
      CHECK(total == labels.size());
    }
  }
}

TEST_CASE("too few items per class is rejected") {
  const auto labels = label_list(100, {0, 5, 0});
  try {
    stratified_split(labels, {});
    FAIL("expected TooFewItems");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::TooFewItems);
  }
}

TEST_CASE("unseen-attack protocol removes held-out scenarios from train and val only") {
  const auto labels = label_list(300, {20, 40, 10});
  const auto s = stratified_split(labels, {});
  const auto u = unseen_attack_protocol(s, labels, {Label::Scenario1, Label::Scenario3});
  auto count = [&](const std::vector<std::size_t>& idx, Label l) {
    return std::count_if(idx.begin(), idx.end(), [&](std::size_t i) { return labels[i] == l; });
  };
  for (const auto* part : {&u.train, &u.val}) {
    CHECK(count(*part, Label::Scenario1) == 0);
    CHECK(count(*part, Label::Scenario3) == 0);
  }
  CHECK(u.test == s.test);
  CHECK(count(u.test, Label::Scenario1) > 0);
  CHECK(count(u.train, Label::Scenario2) == count(s.train, Label::Scenario2));
  CHECK(count(u.train, Label::Benign) == count(s.train, Label::Benign));
}
