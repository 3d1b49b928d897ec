#pragma once

// Glue between the stages: corpus directory -> features -> split -> encoder
// -> composed images -> detector samples.

#include <filesystem>
#include <string>
#include <vector>

#include "chromabehave/conical.hpp"
#include "chromabehave/detector.hpp"
#include "chromabehave/encoder.hpp"
#include "chromabehave/features.hpp"
#include "chromabehave/ingest.hpp"
#include "chromabehave/synth.hpp"

namespace chromabehave::pipeline {

struct CorpusInputs {
  ingest::EventStore store;
  std::vector<ingest::LdapRecord> ldap;
  synth::LabelMap labels;
  conical::TopicDetectors detectors;
};

/// Reads a corpus laid out like `synth` output. Topic detectors are fitted
/// from `corpora/` and `word_freq.csv`.
CorpusInputs load_corpus(const std::filesystem::path& dir);
/// Detectors for an already generated corpus without touching disk.
conical::TopicDetectors fit_seed_detectors();

std::vector<features::LabeledDay> extract(const CorpusInputs& in, const std::string& domain = "dtaa.com");

/// Split, encoder and composed images for one representation.
struct Prepared {
  encoder::Representation rep = encoder::Representation::Daily;
  std::vector<encoder::ContextPlan> plans;
  synth::Splits splits;  // indices into plans / dataset
  encoder::SaeModel sae;
  encoder::SaeTrainReport sae_report;
  std::vector<encoder::EncodedDay> dataset;  // aligned with plans
};

/// Splits the planned days, trains the encoder on the current-day rows of
/// the training split, then composes every planned day.
Prepared prepare(const std::vector<features::LabeledDay>& days, const std::vector<ingest::LdapRecord>& ldap,
                 encoder::Representation rep, const synth::SplitSpec& split, const encoder::SaeHyper& hyper);

/// Same as `prepare` but with a given encoder.
Prepared prepare_with(const encoder::SaeModel& sae, const std::vector<features::LabeledDay>& days,
                      const std::vector<ingest::LdapRecord>& ldap, encoder::Representation rep,
                      const synth::SplitSpec& split);

std::vector<features::Label> plan_labels(const std::vector<encoder::ContextPlan>& plans,
                                         const std::vector<features::LabeledDay>& days);

/// Detector inputs for the given dataset rows.
std::vector<detector::Sample> samples(const std::vector<encoder::EncodedDay>& dataset,
                                      std::span<const std::size_t> index, const std::vector<ingest::LdapRecord>& ldap,
                                      const std::vector<std::string>& roles);

}  // namespace chromabehave::pipeline
