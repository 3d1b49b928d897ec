#pragma once

// A run directory holds everything one end-to-end training produces:
//
//   features.csv          behavior features + ground truth
//   ldap.csv              merged directory snapshot
//   psychometric.csv      OCEAN scores
//   sae.json              encoder
//   images/               composed dataset (manifest.jsonl + PNGs)
//   split.json            train/val/test indices into the image manifest
//   detector.json         classifier
//   metrics.json          held-out report

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "chromabehave/detector.hpp"
#include "chromabehave/encoder.hpp"
#include "chromabehave/features.hpp"
#include "chromabehave/ingest.hpp"
#include "chromabehave/synth.hpp"

namespace chromabehave::cli {

namespace fs = std::filesystem;

std::string read_text(const fs::path& path);
void write_text(const fs::path& path, const std::string& text);

/// Accepts a single snapshot CSV, a directory of dated snapshots, a run or
/// store directory with `ldap.csv`, or a corpus directory with `LDAP/`. A
/// `psychometric.csv` next to the snapshots is joined when present.
std::vector<ingest::LdapRecord> load_ldap_any(const fs::path& path);
void save_ldap(const fs::path& dir, const std::vector<ingest::LdapRecord>& ldap);

std::vector<features::LabeledDay> load_features(const fs::path& csv);

std::string splits_to_json(const synth::Splits& s);
synth::Splits splits_from_json(const std::string& text);

std::vector<features::Label> dataset_labels(const std::vector<encoder::EncodedDay>& data);

struct RunData {
  fs::path dir;
  std::vector<features::LabeledDay> days;
  std::vector<ingest::LdapRecord> ldap;
  encoder::SaeModel sae;
  std::vector<encoder::ContextPlan> plans;
  std::vector<encoder::EncodedDay> dataset;  // aligned with plans
  synth::Splits splits;
  std::vector<std::string> roles;

  std::vector<detector::Sample> samples(const std::vector<std::size_t>& index) const;
  /// Current-day feature rows of the given dataset entries.
  Eigen::MatrixXd feature_rows(const std::vector<std::size_t>& index) const;
};

/// Loads a run directory and recomposes its dataset from features + encoder
/// (deterministic, so it matches images/). `roles` come from `model` when given.
RunData load_run(const fs::path& dir, const detector::DetectionModel* model = nullptr,
                 encoder::Representation rep = encoder::Representation::Daily);

}  // namespace chromabehave::cli
