#include "chromabehave/pipeline.hpp"

#include <fstream>
#include <set>
#include <unordered_map>

namespace chromabehave::pipeline {

namespace fs = std::filesystem;

CorpusInputs load_corpus(const fs::path& dir) {
  CorpusInputs in;
  in.store = ingest::EventStore::load_dir(dir);
  const auto psych = dir / "psychometric.csv";
  in.ldap = ingest::load_ldap_dir(dir / "LDAP", fs::exists(psych) ? std::optional<fs::path>(psych) : std::nullopt);
  if (std::ifstream labels(dir / "labels.csv"); labels) in.labels = features::read_labels_csv(labels);
  if (fs::exists(dir / "corpora") && fs::exists(dir / "word_freq.csv")) {
    std::ifstream dict_in(dir / "word_freq.csv");
    in.detectors = conical::TopicDetectors::fit_dir(dir / "corpora", ingest::load_word_frequencies(dict_in));
  } else {
    in.detectors = fit_seed_detectors();
  }
  return in;
}

conical::TopicDetectors fit_seed_detectors() {
  const auto dict = synth::seed_dictionary();
  conical::TopicDetectors d;
  for (auto t : conical::kAllTopics)
    d.models[static_cast<std::size_t>(t)] =
        conical::ConicalModel::fit(std::string(conical::topic_name(t)), synth::seed_documents(t), dict);
  return d;
}

std::vector<features::LabeledDay> extract(const CorpusInputs& in, const std::string& domain) {
  features::FeatureContext base;
  base.org_domain = domain;
  return features::extract_all(in.store, in.ldap, in.detectors, base, in.labels);
}

std::vector<features::Label> plan_labels(const std::vector<encoder::ContextPlan>& plans,
                                         const std::vector<features::LabeledDay>& days) {
  std::vector<features::Label> out;
  out.reserve(plans.size());
  for (const auto& p : plans) out.push_back(days[p.current].label);
  return out;
}

namespace {

Prepared split_plans(const std::vector<features::LabeledDay>& days, const std::vector<ingest::LdapRecord>& ldap,
                     encoder::Representation rep, const synth::SplitSpec& split) {
  Prepared out;
  out.rep = rep;
  out.plans = encoder::plan_contexts(rep, days, ldap);
  const auto labels = plan_labels(out.plans, days);
  out.splits = synth::stratified_split(labels, split);
  return out;
}

}  // namespace

Prepared prepare(const std::vector<features::LabeledDay>& days, const std::vector<ingest::LdapRecord>& ldap,
                 encoder::Representation rep, const synth::SplitSpec& split, const encoder::SaeHyper& hyper) {
  auto out = split_plans(days, ldap, rep, split);
  // The encoder only sees feature rows of training-split evaluation days.
  std::set<std::size_t> rows;
  for (std::size_t i : out.splits.train) rows.insert(out.plans[i].current);
  std::vector<features::LabeledDay> train_days;
  train_days.reserve(rows.size());
  for (std::size_t r : rows) train_days.push_back(days[r]);
  out.sae = encoder::train_sae(encoder::feature_matrix(train_days), hyper, &out.sae_report);
  out.dataset = encoder::compose_dataset(out.sae, rep, days, ldap);
  return out;
}

Prepared prepare_with(const encoder::SaeModel& sae, const std::vector<features::LabeledDay>& days,
                      const std::vector<ingest::LdapRecord>& ldap, encoder::Representation rep,
                      const synth::SplitSpec& split) {
  auto out = split_plans(days, ldap, rep, split);
  out.sae = sae;
  out.dataset = encoder::compose_dataset(out.sae, rep, days, ldap);
  return out;
}

std::vector<detector::Sample> samples(const std::vector<encoder::EncodedDay>& dataset,
                                      std::span<const std::size_t> index, const std::vector<ingest::LdapRecord>& ldap,
                                      const std::vector<std::string>& roles) {
  std::unordered_map<std::string, const ingest::LdapRecord*> by_user;
  for (const auto& r : ldap) by_user[r.user] = &r;
  const ingest::LdapRecord unknown;
  std::vector<detector::Sample> out;
  out.reserve(index.size());
  for (std::size_t i : index) {
    const auto& d = dataset.at(i);
    const auto it = by_user.find(d.image.user);
    detector::Sample s;
    s.image = d.image;
    s.nd = detector::non_dynamic(roles, it == by_user.end() ? unknown : *it->second).values;
    s.label = features::is_malicious(d.label) ? 1 : 0;
    s.scenario = d.label;
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace chromabehave::pipeline
