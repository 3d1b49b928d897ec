#include "run_dir.hpp"

#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "chromabehave/pipeline.hpp"

namespace chromabehave::cli {

using nlohmann::json;

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
}

namespace {

std::vector<ingest::LdapRecord> load_snapshot(const fs::path& file, const fs::path& psych) {
  std::ifstream snap(file, std::ios::binary);
  if (!snap) fail(ErrorCode::Io, "cannot open " + file.string());
  if (fs::exists(psych)) {
    std::ifstream p(psych, std::ios::binary);
    return ingest::load_ldap(snap, &p);
  }
  return ingest::load_ldap(snap);
}

std::optional<fs::path> existing(const fs::path& p) {
  return fs::exists(p) ? std::optional<fs::path>(p) : std::nullopt;
}

}  // namespace

std::vector<ingest::LdapRecord> load_ldap_any(const fs::path& path) {
  if (!fs::is_directory(path)) return load_snapshot(path, path.parent_path() / "psychometric.csv");
  if (fs::exists(path / "ldap.csv")) return load_snapshot(path / "ldap.csv", path / "psychometric.csv");
  if (fs::is_directory(path / "LDAP")) return ingest::load_ldap_dir(path / "LDAP", existing(path / "psychometric.csv"));
  return ingest::load_ldap_dir(path, existing(path.parent_path() / "psychometric.csv"));
}

void save_ldap(const fs::path& dir, const std::vector<ingest::LdapRecord>& ldap) {
  std::ostringstream snap, psych;
  ingest::write_ldap_snapshot(snap, ldap);
  ingest::write_psychometric(psych, ldap);
  write_text(dir / "ldap.csv", snap.str());
  write_text(dir / "psychometric.csv", psych.str());
}

std::vector<features::LabeledDay> load_features(const fs::path& csv) {
  std::ifstream in(csv, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open " + csv.string());
  return features::read_features_csv(in);
}

std::string splits_to_json(const synth::Splits& s) {
  return json{{"train", s.train}, {"val", s.val}, {"test", s.test}}.dump() + "\n";
}

synth::Splits splits_from_json(const std::string& text) {
  try {
    const auto j = json::parse(text);
    return {j.at("train").get<std::vector<std::size_t>>(), j.at("val").get<std::vector<std::size_t>>(),
            j.at("test").get<std::vector<std::size_t>>()};
  } catch (const json::exception& e) {
    fail(ErrorCode::CorruptFile, std::string("split file: ") + e.what());
  }
}

std::vector<features::Label> dataset_labels(const std::vector<encoder::EncodedDay>& data) {
  std::vector<features::Label> out;
  out.reserve(data.size());
  for (const auto& d : data) out.push_back(d.label);
  return out;
}

std::vector<detector::Sample> RunData::samples(const std::vector<std::size_t>& index) const {
  return pipeline::samples(dataset, index, ldap, roles);
}

Eigen::MatrixXd RunData::feature_rows(const std::vector<std::size_t>& index) const {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(index.size()), static_cast<Eigen::Index>(features::kFeatureCount));
  for (std::size_t i = 0; i < index.size(); ++i) {
    const auto& f = days.at(plans.at(index[i]).current).day.f;
    for (std::size_t j = 0; j < f.size(); ++j) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = f[j];
  }
  return x;
}

RunData load_run(const fs::path& dir, const detector::DetectionModel* model, encoder::Representation rep) {
  RunData r;
  r.dir = dir;
  r.days = load_features(dir / "features.csv");
  r.ldap = load_ldap_any(dir);
  r.sae = encoder::SaeModel::load(dir / "sae.json");
  r.plans = encoder::plan_contexts(rep, r.days, r.ldap);
  r.dataset = encoder::compose_dataset(r.sae, rep, r.days, r.ldap);
  r.splits = splits_from_json(read_text(dir / "split.json"));
  const std::size_t n = r.dataset.size();
  for (const auto* part : {&r.splits.train, &r.splits.val, &r.splits.test})
    for (std::size_t i : *part)
      if (i >= n) fail(ErrorCode::CorruptFile, "split index outside the dataset");
  r.roles = model ? model->roles : detector::role_vocabulary(r.ldap);
  return r;
}

}  // namespace chromabehave::cli
