#include "chromabehave/service.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>

#include <json.hpp>

#include "chromabehave/encoding_eval.hpp"
#include "chromabehave/explain.hpp"
#include "io_util.hpp"

namespace chromabehave::service {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

std::string_view reason_name(AlertReason r) { return r == AlertReason::Malicious ? "malicious" : "low_confidence"; }

std::string_view status_name(AlertStatus s) {
  switch (s) {
    case AlertStatus::Open: return "open";
    case AlertStatus::LabeledBenign: return "labeled_benign";
    case AlertStatus::LabeledMalicious: return "labeled_malicious";
  }
  return "open";
}

AlertStatus status_from_name(std::string_view name) {
  if (name == "open") return AlertStatus::Open;
  if (name == "labeled_benign") return AlertStatus::LabeledBenign;
  if (name == "labeled_malicious") return AlertStatus::LabeledMalicious;
  fail(ErrorCode::InvalidArgument, "unknown alert status '" + std::string(name) + "'");
}

Verdict verdict_from_name(std::string_view name) {
  if (name == "benign") return Verdict::Benign;
  if (name == "malicious") return Verdict::Malicious;
  fail(ErrorCode::InvalidArgument, "label must be 'benign' or 'malicious'");
}

namespace {

AlertReason reason_from_name(std::string_view name) {
  if (name == "malicious") return AlertReason::Malicious;
  if (name == "low_confidence") return AlertReason::LowConfidence;
  fail(ErrorCode::CorruptFile, "unknown alert reason '" + std::string(name) + "'");
}

std::string now_iso() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Appends one line and fsyncs before returning.
void append_durable(const fs::path& path, const std::string& line) {
  const int fd = ::open(path.c_str(), O_WRONLY | O_APPEND | O_CREAT, 0644);
  if (fd < 0) fail(ErrorCode::Io, "cannot open " + path.string());
  const std::string data = line + "\n";
  std::size_t off = 0;
  while (off < data.size()) {
    const ssize_t n = ::write(fd, data.data() + off, data.size() - off);
    if (n < 0) {
      ::close(fd);
      fail(ErrorCode::Io, "write failed on " + path.string());
    }
    off += static_cast<std::size_t>(n);
  }
  const bool ok = ::fsync(fd) == 0;
  ::close(fd);
  if (!ok) fail(ErrorCode::Io, "fsync failed on " + path.string());
}

/// Write-then-rename so readers never see a partial file.
void write_atomic(const fs::path& path, const std::string& data) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    out << data;
    out.flush();
    if (!out) fail(ErrorCode::Io, "cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

ordered_json alert_json(const Alert& a) {
  ordered_json j;
  j["id"] = a.id;
  j["user"] = a.user;
  j["date"] = a.date.iso();
  j["probability"] = a.probability;
  j["confidence"] = a.confidence;
  j["reason"] = reason_name(a.reason);
  j["status"] = status_name(a.status);
  j["created_at"] = a.created_at;
  j["model_version"] = a.model_version;
  j["encoding_ref"] = a.encoding_ref;
  j["analyst"] = a.analyst;
  if (a.features) {
    ordered_json f = ordered_json::object();
    for (std::size_t i = 0; i < features::kFeatureCount; ++i) f[std::string(features::kFeatureNames[i])] = (*a.features)[i];
    j["features"] = f;
  } else {
    j["features"] = nullptr;
  }
  return j;
}

Alert alert_from_json(const nlohmann::json& j) {
  Alert a;
  a.id = j.at("id").get<std::string>();
  a.user = j.at("user").get<std::string>();
  a.date = Date::parse_iso(j.at("date").get<std::string>());
  a.probability = j.at("probability").get<double>();
  a.confidence = j.at("confidence").get<double>();
  a.reason = reason_from_name(j.at("reason").get<std::string>());
  a.status = status_from_name(j.at("status").get<std::string>());
  a.created_at = j.value("created_at", "");
  a.model_version = j.value("model_version", 0);
  a.encoding_ref = j.value("encoding_ref", "");
  a.analyst = j.value("analyst", "");
  if (j.contains("features") && j["features"].is_object()) {
    features::FeatureVector f{};
    for (std::size_t i = 0; i < features::kFeatureCount; ++i) f[i] = j["features"].at(std::string(features::kFeatureNames[i])).get<double>();
    a.features = f;
  }
  return a;
}

bool open_first(const Alert& a, const Alert& b) {
  if (a.reason != b.reason) return a.reason == AlertReason::Malicious;
  if (a.confidence != b.confidence) return a.confidence < b.confidence;
  return a.id < b.id;
}

}  // namespace

std::string alert_to_json(const Alert& a) { return alert_json(a).dump(); }

void ServiceConfig::validate() const {
  if (!(alert_threshold > 0 && alert_threshold < 0.5))
    fail(ErrorCode::InvalidArgument, "alert_threshold must lie in (0, 0.5)");
  if (finetune_epochs < 1 || !(finetune_lr > 0)) fail(ErrorCode::InvalidArgument, "fine-tune epochs and lr must be positive");
}

std::string ServiceConfig::to_json() const {
  ordered_json j{{"format", "chromabehave.service-config"},
                 {"version", 1},
                 {"alert_threshold", alert_threshold},
                 {"retrain_batch_min", retrain_batch_min},
                 {"finetune_epochs", finetune_epochs},
                 {"finetune_lr", finetune_lr},
                 {"seed", seed}};
  return j.dump(2);
}

ServiceConfig ServiceConfig::from_json(std::string_view text) {
  const auto j = detail::parse_json(text, "service config");
  ServiceConfig c;
  c.alert_threshold = j.value("alert_threshold", c.alert_threshold);
  c.retrain_batch_min = j.value("retrain_batch_min", c.retrain_batch_min);
  c.finetune_epochs = j.value("finetune_epochs", c.finetune_epochs);
  c.finetune_lr = j.value("finetune_lr", c.finetune_lr);
  c.seed = j.value("seed", c.seed);
  c.validate();
  return c;
}

std::optional<AlertReason> alert_reason(double p, double threshold) {
  if (p >= 0.5) return AlertReason::Malicious;
  if (p >= threshold) return AlertReason::LowConfidence;
  return std::nullopt;
}

double confidence_of(double p) { return std::abs(p - 0.5) * 2.0; }

// ---------------------------------------------------------------------------

AlertService::AlertService(ServiceConfig cfg, fs::path state_dir) : cfg_(cfg), dir_(std::move(state_dir)) {
  cfg_.validate();
  if (!dir_.empty()) {
    fs::create_directories(dir_ / "encodings");
    fs::create_directories(dir_ / "models");
    replay();
  }
}

void AlertService::replay() {
  // Models: every stored version, serving the one named in CURRENT.
  for (const auto& entry : fs::directory_iterator(dir_ / "models")) {
    const auto stem = entry.path().stem().string();
    if (entry.path().extension() != ".json" || stem.size() < 2 || stem[0] != 'v') continue;
    const int v = std::stoi(stem.substr(1));
    versions_[v] = std::make_shared<const detector::DetectionModel>(detector::DetectionModel::load(entry.path()));
  }
  if (!versions_.empty()) {
    int current = versions_.rbegin()->first;
    if (std::ifstream in(dir_ / "models" / "CURRENT"); in) in >> current;
    if (auto it = versions_.find(current); it != versions_.end()) {
      model_ = it->second;
      version_ = current;
    }
  }

  std::ifstream log(dir_ / "alerts.jsonl");
  std::string line;
  while (std::getline(log, line)) {
    if (trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception&) {
      continue;  // torn final line after a crash
    }
    const auto type = j.value("type", "");
    if (type == "alert") {
      Record rec;
      rec.alert = alert_from_json(j.at("alert"));
      const auto png = detail::read_file(dir_ / rec.alert.encoding_ref);
      rec.sample.image = eval::read_color_png(std::span(reinterpret_cast<const std::uint8_t*>(png.data()), png.size()));
      rec.sample.image.user = rec.alert.user;
      rec.sample.image.date = rec.alert.date;
      rec.sample.nd = detail::vector_from_json(j.at("nd"));
      scored_[{rec.alert.user, rec.alert.date.days, rec.alert.model_version}] = rec.alert.id;
      next_id_ = std::max<std::uint64_t>(next_id_, std::stoull(rec.alert.id.substr(1)) + 1);
      records_[rec.alert.id] = std::move(rec);
    } else if (type == "label") {
      auto it = records_.find(j.at("id").get<std::string>());
      if (it == records_.end()) continue;
      const bool mal = j.at("label").get<std::string>() == "malicious";
      it->second.alert.status = mal ? AlertStatus::LabeledMalicious : AlertStatus::LabeledBenign;
      it->second.alert.analyst = j.value("analyst", "");
      it->second.sample.label = mal ? 1 : 0;
      pool_.push_back(it->first);
    }
  }
}

void AlertService::set_training_data(std::vector<detector::Sample> train, std::vector<detector::Sample> val) {
  std::lock_guard lock(retrain_mutex_);
  train_ = std::move(train);
  val_ = std::move(val);
}

void AlertService::set_encoder(encoder::SaeModel sae, Eigen::MatrixXd background) {
  std::lock_guard lock(store_mutex_);
  sae_ = std::move(sae);
  background_ = std::move(background);
}

void AlertService::set_evaluation_set(std::vector<detector::Sample> test) {
  std::lock_guard lock(store_mutex_);
  test_ = std::move(test);
  eval_cache_.clear();
}

int AlertService::install_model(detector::DetectionModel model) {
  auto ptr = std::make_shared<const detector::DetectionModel>(std::move(model));
  std::unique_lock lock(model_mutex_);
  const int v = (versions_.empty() ? 0 : versions_.rbegin()->first) + 1;
  if (!dir_.empty()) {
    char name[32];
    std::snprintf(name, sizeof name, "v%04d.json", v);
    write_atomic(dir_ / "models" / name, ptr->to_json());
    write_atomic(dir_ / "models" / "CURRENT", std::to_string(v) + "\n");
  }
  versions_[v] = ptr;
  model_ = ptr;
  version_ = v;
  return v;
}

void AlertService::rollback(int version) {
  std::unique_lock lock(model_mutex_);
  auto it = versions_.find(version);
  if (it == versions_.end()) fail(ErrorCode::InvalidArgument, "no stored model version " + std::to_string(version));
  if (!dir_.empty()) write_atomic(dir_ / "models" / "CURRENT", std::to_string(version) + "\n");
  model_ = it->second;
  version_ = version;
}

int AlertService::model_version() const {
  std::shared_lock lock(model_mutex_);
  return version_;
}

std::shared_ptr<const detector::DetectionModel> AlertService::model() const {
  std::shared_lock lock(model_mutex_);
  return model_;
}

std::string AlertService::next_alert_id() {
  char buf[16];
  std::snprintf(buf, sizeof buf, "A%06llu", static_cast<unsigned long long>(next_id_++));
  return buf;
}

void AlertService::persist_alert(const Record& rec) {
  if (dir_.empty()) return;
  const auto png = eval::write_png(rec.sample.image);
  write_atomic(dir_ / rec.alert.encoding_ref, std::string(png.begin(), png.end()));
  ordered_json j{{"type", "alert"}, {"alert", alert_json(rec.alert)}, {"nd", detail::vector_to_json(rec.sample.nd)}};
  append_durable(dir_ / "alerts.jsonl", j.dump());
}

ScoreOutcome AlertService::score_and_alert(const ScoreRequest& request) {
  std::shared_ptr<const detector::DetectionModel> model;
  int version = 0;
  {
    std::shared_lock lock(model_mutex_);
    model = model_;
    version = version_;
  }
  if (!model) fail(ErrorCode::ModelUnavailable, "no model installed");

  ScoreOutcome out;
  const auto key = std::make_tuple(request.user, request.date.days, version);
  {
    std::lock_guard lock(store_mutex_);
    if (auto it = scored_.find(key); it != scored_.end()) {
      out.repeated = true;
      if (it->second) {
        out.alert = records_.at(*it->second).alert;
        out.probability = out.alert->probability;
        return out;
      }
    }
  }
  out.probability = detector::predict(*model, request.image, request.nd);
  if (out.repeated) return out;

  std::lock_guard lock(store_mutex_);
  // Another request may have raced us to the same key.
  if (auto it = scored_.find(key); it != scored_.end()) {
    out.repeated = true;
    if (it->second) out.alert = records_.at(*it->second).alert;
    return out;
  }
  const auto reason = alert_reason(out.probability, cfg_.alert_threshold);
  if (!reason) {
    scored_[key] = std::nullopt;
    return out;
  }
  Record rec;
  rec.alert.id = next_alert_id();
  rec.alert.user = request.user;
  rec.alert.date = request.date;
  rec.alert.probability = out.probability;
  rec.alert.confidence = confidence_of(out.probability);
  rec.alert.reason = *reason;
  rec.alert.created_at = now_iso();
  rec.alert.model_version = version;
  rec.alert.encoding_ref = "encodings/" + rec.alert.id + ".png";
  rec.alert.features = request.features;
  rec.sample.image = request.image;
  rec.sample.image.user = request.user;
  rec.sample.image.date = request.date;
  rec.sample.nd = request.nd.values;
  persist_alert(rec);
  scored_[key] = rec.alert.id;
  out.alert = rec.alert;
  records_[rec.alert.id] = std::move(rec);
  return out;
}

Alert AlertService::submit_label(const std::string& alert_id, Verdict verdict, const std::string& analyst) {
  std::lock_guard lock(store_mutex_);
  auto it = records_.find(alert_id);
  if (it == records_.end()) fail(ErrorCode::UnknownAlert, "no alert '" + alert_id + "'");
  auto& rec = it->second;
  if (rec.alert.status != AlertStatus::Open) fail(ErrorCode::AlreadyLabeled, "alert '" + alert_id + "' is already labeled");
  const bool mal = verdict == Verdict::Malicious;
  if (!dir_.empty()) {
    ordered_json j{{"type", "label"},
                   {"id", alert_id},
                   {"label", mal ? "malicious" : "benign"},
                   {"analyst", analyst},
                   {"at", now_iso()}};
    append_durable(dir_ / "alerts.jsonl", j.dump());
  }
  rec.alert.status = mal ? AlertStatus::LabeledMalicious : AlertStatus::LabeledBenign;
  rec.alert.analyst = analyst;
  rec.sample.label = mal ? 1 : 0;
  rec.sample.scenario = mal ? features::Label::Scenario2 : features::Label::Benign;
  pool_.push_back(alert_id);
  return rec.alert;
}

std::vector<Alert> AlertService::alerts(std::optional<AlertStatus> status) const {
  std::lock_guard lock(store_mutex_);
  std::vector<Alert> out;
  for (const auto& [id, rec] : records_)
    if (!status || rec.alert.status == *status) out.push_back(rec.alert);
  if (status == AlertStatus::Open) std::sort(out.begin(), out.end(), open_first);
  return out;
}

std::optional<Alert> AlertService::find(const std::string& alert_id) const {
  std::lock_guard lock(store_mutex_);
  auto it = records_.find(alert_id);
  if (it == records_.end()) return std::nullopt;
  return it->second.alert;
}

std::optional<encoder::ColorEncoding> AlertService::encoding(const std::string& alert_id) const {
  std::lock_guard lock(store_mutex_);
  auto it = records_.find(alert_id);
  if (it == records_.end()) return std::nullopt;
  return it->second.sample.image;
}

std::size_t AlertService::pool_size() const {
  std::lock_guard lock(store_mutex_);
  return pool_.size();
}

int AlertService::retrain() {
  std::lock_guard retrain_lock(retrain_mutex_);
  std::vector<detector::Sample> data;
  {
    std::lock_guard lock(store_mutex_);
    if (pool_.size() < cfg_.retrain_batch_min)
      fail(ErrorCode::PoolTooSmall, "labeled pool has " + std::to_string(pool_.size()) + " items, need " +
                                        std::to_string(cfg_.retrain_batch_min));
    data = train_;
    for (const auto& id : pool_) data.push_back(records_.at(id).sample);
  }
  const auto base = model();
  if (!base) fail(ErrorCode::ModelUnavailable, "no model installed");
  // Scoring keeps using the old version until install_model swaps it in.
  auto tuned = detector::fine_tune(*base, data, val_, cfg_.finetune_lr, cfg_.finetune_epochs);
  return install_model(std::move(tuned));
}

std::vector<FeatureAttribution> AlertService::attribution_snippet(const std::string& alert_id, std::size_t top) const {
  Record rec;
  {
    std::lock_guard lock(store_mutex_);
    auto it = records_.find(alert_id);
    if (it == records_.end()) fail(ErrorCode::UnknownAlert, "no alert '" + alert_id + "'");
    if (!sae_ || background_.rows() == 0 || !it->second.alert.features) return {};
    rec = it->second;
  }
  const auto m = model();
  if (!m) return {};
  const auto& f = *rec.alert.features;
  Eigen::MatrixXd x(1, static_cast<Eigen::Index>(features::kFeatureCount));
  for (std::size_t i = 0; i < features::kFeatureCount; ++i) x(0, static_cast<Eigen::Index>(i)) = f[i];
  const explain::RemovalExplainer ex(explain::detector_model(*sae_, *m, {rec.sample}), x, {1}, background_);
  std::vector<bool> kept(features::kFeatureCount, true);
  const double full = ex.surrogate_eval(std::size_t{0}, kept);
  std::vector<FeatureAttribution> out;
  for (std::size_t i = 0; i < features::kFeatureCount; ++i) {
    kept[i] = false;
    out.push_back({std::string(features::kFeatureNames[i]), f[i], full - ex.surrogate_eval(std::size_t{0}, kept)});
    kept[i] = true;
  }
  std::stable_sort(out.begin(), out.end(), [](const FeatureAttribution& a, const FeatureAttribution& b) {
    return std::abs(a.contribution) > std::abs(b.contribution);
  });
  if (out.size() > top) out.resize(top);
  return out;
}

std::string AlertService::metrics_json() const {
  const auto m = model();
  const int version = model_version();
  ordered_json j;
  j["model_version"] = version;
  std::size_t open = 0, benign = 0, mal = 0;
  std::vector<detector::Sample> test;
  {
    std::lock_guard lock(store_mutex_);
    for (const auto& [id, rec] : records_) {
      if (rec.alert.status == AlertStatus::Open) ++open;
      else if (rec.alert.status == AlertStatus::LabeledBenign) ++benign;
      else ++mal;
    }
    j["alerts"] = {{"open", open}, {"labeled_benign", benign}, {"labeled_malicious", mal}};
    j["pool"] = pool_.size();
    j["retrain_batch_min"] = cfg_.retrain_batch_min;
    if (m && !test_.empty() && !eval_cache_.count(version)) test = test_;
  }
  if (!test.empty()) {
    const auto met = detector::evaluate(*m, test);
    std::lock_guard lock(store_mutex_);
    eval_cache_[version] = met;
  }
  std::lock_guard lock(store_mutex_);
  if (auto it = eval_cache_.find(version); it != eval_cache_.end()) {
    const auto& e = it->second;
    j["evaluation"] = {{"balanced_accuracy", e.balanced_accuracy}, {"precision", e.precision}, {"recall", e.recall},
                       {"f1", e.f1}, {"tp", e.tp}, {"fp", e.fp}, {"tn", e.tn}, {"fn", e.fn}};
  } else {
    j["evaluation"] = nullptr;
  }
  return j.dump();
}

// ---------------------------------------------------------------------------

namespace {

ordered_json metrics_to_json(const detector::Metrics& m) {
  return {{"balanced_accuracy", m.balanced_accuracy}, {"precision", m.precision}, {"recall", m.recall},
          {"f1", m.f1}, {"tp", m.tp}, {"fp", m.fp}, {"tn", m.tn}, {"fn", m.fn}};
}

}  // namespace

std::string LoopInReport::to_json() const {
  ordered_json j{{"before", metrics_to_json(before)},
                 {"after", metrics_to_json(after)},
                 {"scored", scored},
                 {"alerts", alerts},
                 {"low_confidence", low_confidence},
                 {"labeled_malicious", labeled_malicious},
                 {"labeled_benign", labeled_benign},
                 {"version_before", version_before},
                 {"version_after", version_after}};
  return j.dump(2);
}

LoopInReport loop_in_simulation(const detector::DetectionModel& base, std::vector<detector::Sample> train,
                                const std::vector<detector::Sample>& val, std::vector<detector::Sample> test,
                                const ServiceConfig& cfg, const fs::path& state_dir) {
  AlertService svc(cfg, state_dir);
  svc.set_training_data(std::move(train), val);
  LoopInReport rep;
  rep.version_before = svc.install_model(base);
  rep.before = detector::evaluate(base, test);

  for (std::size_t i = 0; i < val.size(); ++i) {
    const auto& s = val[i];
    ScoreRequest req{s.image.user, s.image.date, s.image, {s.nd}, std::nullopt};
    const auto outcome = svc.score_and_alert(req);
    ++rep.scored;
    if (!outcome.alert || outcome.repeated) continue;
    ++rep.alerts;
    if (outcome.alert->reason == AlertReason::LowConfidence) ++rep.low_confidence;
    // Ground truth plays the analyst.
    svc.submit_label(outcome.alert->id, s.label ? Verdict::Malicious : Verdict::Benign, "oracle");
    ++(s.label ? rep.labeled_malicious : rep.labeled_benign);
  }
  rep.version_after = svc.retrain();
  rep.after = detector::evaluate(*svc.model(), test);
  return rep;
}

}  // namespace chromabehave::service
