#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <tuple>
#include <vector>

#include "chromabehave/detector.hpp"
#include "chromabehave/encoder.hpp"
#include "chromabehave/features.hpp"

namespace chromabehave::service {

enum class AlertReason { Malicious, LowConfidence };
enum class AlertStatus { Open, LabeledBenign, LabeledMalicious };
enum class Verdict { Benign, Malicious };

std::string_view reason_name(AlertReason r);
std::string_view status_name(AlertStatus s);
AlertStatus status_from_name(std::string_view name);
Verdict verdict_from_name(std::string_view name);

struct ServiceConfig {
  /// Alert when p >= alert_threshold; [threshold, 0.5) is low confidence.
  double alert_threshold = 0.4;
  std::size_t retrain_batch_min = 16;
  int finetune_epochs = 3;
  double finetune_lr = 0.001;
  std::uint64_t seed = 7;

  /// Throws InvalidArgument unless 0 < alert_threshold < 0.5.
  void validate() const;
  std::string to_json() const;
  static ServiceConfig from_json(std::string_view text);
};

/// Reason for alerting on probability p, or nothing below the threshold.
std::optional<AlertReason> alert_reason(double p, double threshold);
/// |p - 0.5| * 2.
double confidence_of(double p);

struct Alert {
  std::string id;
  std::string user;
  Date date;
  double probability = 0;
  double confidence = 0;
  AlertReason reason = AlertReason::Malicious;
  AlertStatus status = AlertStatus::Open;
  std::string created_at;
  int model_version = 0;
  std::string encoding_ref;
  std::string analyst;
  std::optional<features::FeatureVector> features;
};

std::string alert_to_json(const Alert& a);

struct ScoreRequest {
  std::string user;
  Date date;
  encoder::ColorEncoding image;
  detector::NonDynamicFeatures nd;
  /// Current-day behavior features, kept for evidence and attributions.
  std::optional<features::FeatureVector> features;
};

struct ScoreOutcome {
  double probability = 0;
  std::optional<Alert> alert;
  /// True when this (user, date, model version) had already been scored.
  bool repeated = false;
};

struct FeatureAttribution {
  std::string feature;
  double value = 0;
  /// Probability drop when the feature is removed (marginalized).
  double contribution = 0;
};

/// Alert queue, analyst labels and model versions. With a state directory,
/// alerts and labels go to an fsync'ed JSON-lines log and models to
/// `models/vNNNN.json`; without one everything stays in memory.
class AlertService {
 public:
  explicit AlertService(ServiceConfig cfg, std::filesystem::path state_dir = {});

  const ServiceConfig& config() const { return cfg_; }

  /// Original training and validation sets used when fine-tuning.
  void set_training_data(std::vector<detector::Sample> train, std::vector<detector::Sample> val);
  /// Encoder plus background feature rows (attribution snippets, /api/score).
  void set_encoder(encoder::SaeModel sae, Eigen::MatrixXd background);
  const encoder::SaeModel* encoder() const { return sae_ ? &*sae_ : nullptr; }
  /// Held-out set reported by metrics().
  void set_evaluation_set(std::vector<detector::Sample> test);

  /// Stores `model` as the next version and serves it. Returns the version.
  int install_model(detector::DetectionModel model);
  /// Serves an earlier stored version again. Throws InvalidArgument.
  void rollback(int version);
  int model_version() const;
  std::shared_ptr<const detector::DetectionModel> model() const;

  /// Throws ModelUnavailable.
  ScoreOutcome score_and_alert(const ScoreRequest& request);
  /// Throws UnknownAlert, AlreadyLabeled.
  Alert submit_label(const std::string& alert_id, Verdict verdict, const std::string& analyst);

  /// Open alerts come back in triage order: malicious first, then ascending
  /// confidence.
  std::vector<Alert> alerts(std::optional<AlertStatus> status = std::nullopt) const;
  std::optional<Alert> find(const std::string& alert_id) const;
  std::optional<encoder::ColorEncoding> encoding(const std::string& alert_id) const;
  std::size_t pool_size() const;

  /// Fine-tunes the served model on training data plus the labeled pool and
  /// installs the result. Throws PoolTooSmall, ModelUnavailable.
  int retrain();

  /// Top features by removal effect on this alert's probability; empty when
  /// no encoder or features are available.
  std::vector<FeatureAttribution> attribution_snippet(const std::string& alert_id, std::size_t top = 5) const;

  /// Queue counts, pool size, model version and held-out metrics (JSON).
  std::string metrics_json() const;

 private:
  struct Record {
    Alert alert;
    detector::Sample sample;
  };

  void replay();
  void persist_alert(const Record& rec);
  std::string next_alert_id();

  ServiceConfig cfg_;
  std::filesystem::path dir_;

  mutable std::shared_mutex model_mutex_;
  std::shared_ptr<const detector::DetectionModel> model_;
  int version_ = 0;
  std::map<int, std::shared_ptr<const detector::DetectionModel>> versions_;

  mutable std::mutex store_mutex_;
  std::map<std::string, Record> records_;
  std::map<std::tuple<std::string, std::int32_t, int>, std::optional<std::string>> scored_;
  std::vector<std::string> pool_;  // labeled alert ids, in label order
  std::uint64_t next_id_ = 1;

  std::mutex retrain_mutex_;
  std::vector<detector::Sample> train_, val_, test_;
  std::optional<encoder::SaeModel> sae_;
  Eigen::MatrixXd background_;
  mutable std::map<int, detector::Metrics> eval_cache_;
};

struct LoopInReport {
  detector::Metrics before;
  detector::Metrics after;
  std::size_t scored = 0;
  std::size_t alerts = 0;
  std::size_t low_confidence = 0;
  std::size_t labeled_malicious = 0;
  std::size_t labeled_benign = 0;
  int version_before = 0;
  int version_after = 0;
  std::string to_json() const;
};

/// Offline loop-in: alerts on `val` are labeled with ground truth, the model
/// is fine-tuned on train + pool, and test metrics are compared.
LoopInReport loop_in_simulation(const detector::DetectionModel& base, std::vector<detector::Sample> train,
                                const std::vector<detector::Sample>& val, std::vector<detector::Sample> test,
                                const ServiceConfig& cfg, const std::filesystem::path& state_dir = {});

/// HTTP/JSON front end over an AlertService.
class HttpApi {
 public:
  struct Options {
    /// Static files mounted at `/` (the triage UI), if set.
    std::optional<std::filesystem::path> ui_dir;
    /// LDAP used to build non-dynamic features for POST /api/score.
    std::vector<ingest::LdapRecord> ldap;
  };

  HttpApi(AlertService& service, Options opts);
  ~HttpApi();
  HttpApi(const HttpApi&) = delete;
  HttpApi& operator=(const HttpApi&) = delete;

  /// Blocks until stop(). Returns false when the address cannot be bound.
  bool listen(const std::string& host, int port);
  /// Binds an ephemeral port and returns it (-1 on failure); then call run().
  int bind_any_port(const std::string& host);
  bool run();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace chromabehave::service
