#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "chromabehave/conical.hpp"
#include "chromabehave/features.hpp"
#include "chromabehave/ingest.hpp"

namespace chromabehave::synth {

using LabelMap = std::map<std::pair<std::string, std::int32_t>, features::Label>;

/// Malicious-to-total ratios of the reference insider dataset, one per
/// scenario: one attack day per `ratio` user-days.
inline constexpr std::array<double, 3> kScenarioRatio = {3899.0, 384.0, 16570.0};

struct ScenarioConfig {
  int n_users = 200;
  int n_days = 120;
  std::uint64_t seed = 7;
  Date start = Date::from_ymd(2010, 1, 4);
  std::string domain = "dtaa.com";
  int team_size = 8;
  /// Attack days per scenario; negative entries are derived from kScenarioRatio.
  std::array<int, 3> scenario_days{-1, -1, -1};
  /// Target attack days per insider for each scenario.
  std::array<int, 3> days_per_insider{3, 10, 1};
  /// No attack before this day index, and attacks of one insider are at least
  /// `attack_gap` days apart.
  int first_attack_day = 14;
  int attack_gap = 3;
  /// Per-user-day probabilities of benign irregularities.
  double late_work_rate = 0.0005;
  double job_browse_rate = 0.0005;
  double usb_burst_rate = 0.001;
};

/// ceil(n_users * n_days / ratio) for each scenario.
std::array<int, 3> derived_scenario_days(int n_users, int n_days);

struct Insider {
  std::string user;
  features::Label scenario = features::Label::Benign;
  std::vector<Date> days;
};

struct Corpus {
  std::vector<ingest::LogEvent> events;
  std::vector<ingest::LdapRecord> ldap;
  LabelMap labels;  // every generated user-day
  std::vector<Insider> insiders;
};

/// Deterministic for a given config. Throws ConfigInfeasible.
Corpus generate(const ScenarioConfig& cfg);

/// Writes the five source CSVs, LDAP/ monthly snapshots, psychometric.csv,
/// labels.csv, corpora/<topic>/NN.txt and word_freq.csv.
void write_corpus(const Corpus& corpus, const ScenarioConfig& cfg, const std::filesystem::path& out);

/// Built-in seed documents per topic and the general-language dictionary.
const std::vector<std::string>& seed_documents(conical::Topic topic);
ingest::FrequencyDict seed_dictionary();

/// Seed corpora and dictionary only (what `cc fit` needs).
void write_seed_corpora(const std::filesystem::path& corpora_dir);
void write_word_frequencies(const std::filesystem::path& path);

struct SplitSpec {
  double train = 0.7;
  double val = 0.1;
  double test = 0.2;
  std::uint64_t seed = 7;
  /// Minimum items per binary class.
  std::size_t min_per_class = 10;
};

struct Splits {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

/// Partitions item indices. Benign and malicious quotas follow the split
/// ratios by largest remainder, and within the malicious class every scenario
/// is spread across the splits the same way. Throws TooFewItems.
Splits stratified_split(std::span<const features::Label> labels, const SplitSpec& spec);

/// Drops every held-out-scenario item from train and val; test is unchanged.
Splits unseen_attack_protocol(const Splits& splits, std::span<const features::Label> labels,
                              const std::set<features::Label>& held_out);

}  // namespace chromabehave::synth
