#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <thread>

#include "chromabehave/encoding_eval.hpp"
#include "chromabehave/service.hpp"
#include "doctest.h"
#include "unit/toy_detector.hpp"

// after Eigen: <resolv.h> defines `_res`
#include <httplib.h>

#include <json.hpp>

using namespace chromabehave;
using namespace chromabehave::service;
using toy::kRoles;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// All weights zero, so every input gets sigmoid(bias) = p.
detector::DetectionModel constant_model(double p) {
  detector::DetectionModel m;
  m.params = detector::CnnParams::init(3, 2, 2, 2, 7, 1);
  for (auto t : m.params.flat()) t.setZero();
  m.params.b4(0) = std::log(p / (1 - p));
  m.roles = kRoles;
  m.nd_mean = Eigen::VectorXd::Zero(7);
  return m;
}

ScoreRequest request(const std::string& user, int day, std::uint64_t seed = 1) {
  std::mt19937_64 rng(seed);
  auto s = toy::toy_sample(rng, false, 0);
  ScoreRequest r;
  r.user = user;
  r.date = Date::from_ymd(2010, 1, 1) + day;
  r.image = s.image;
  r.nd.values = s.nd;
  return r;
}

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return ErrorCode::InvalidArgument;
}

fs::path fresh_dir(const std::string& name) {
  const auto d = fs::temp_directory_path() / name;
  fs::remove_all(d);
  return d;
}

struct ToyDetector {
  std::vector<detector::Sample> train, val, test;
  detector::DetectionModel model;
};

const ToyDetector& toy_detector() {
  static const ToyDetector t = [] {
    ToyDetector x;
    x.train = toy::toy_set(31, 120, 30);
    x.val = toy::toy_set(32, 40, 10);
    x.test = toy::toy_set(33, 60, 20);
    for (auto* part : {&x.train, &x.val, &x.test})
      for (std::size_t i = 0; i < part->size(); ++i) (*part)[i].image.date = Date::from_ymd(2010, 1, 1) + static_cast<int>(i);
    x.model = detector::train_classifier(x.train, x.val, kRoles, toy::small_config());
    return x;
  }();
  return t;
}

}  // namespace

TEST_CASE("alert reasons for the documented probabilities") {
  CHECK(alert_reason(0.95, 0.4) == AlertReason::Malicious);
  CHECK(alert_reason(0.45, 0.4) == AlertReason::LowConfidence);
  CHECK_FALSE(alert_reason(0.10, 0.4).has_value());
  CHECK(alert_reason(0.5, 0.4) == AlertReason::Malicious);
  CHECK(alert_reason(0.4, 0.4) == AlertReason::LowConfidence);
  CHECK(confidence_of(0.95) == doctest::Approx(0.9));
  CHECK(confidence_of(0.45) == doctest::Approx(0.1));
  CHECK(confidence_of(0.5) == 0.0);
}

TEST_CASE("configuration validates the threshold band and round-trips") {
  ServiceConfig c;
  c.alert_threshold = 0.3;
  c.retrain_batch_min = 4;
  const auto back = ServiceConfig::from_json(c.to_json());
  CHECK(back.alert_threshold == 0.3);
  CHECK(back.retrain_batch_min == 4);
  for (double bad : {0.0, 0.5, 0.7, -0.1}) {
    c.alert_threshold = bad;
    CHECK_THROWS_AS(c.validate(), Error);
  }
}

TEST_CASE("scoring raises malicious, low-confidence or no alert") {
  AlertService svc({});
  CHECK(code_of([&] { svc.score_and_alert(request("U1", 0)); }) == ErrorCode::ModelUnavailable);

  svc.install_model(constant_model(0.95));
  auto out = svc.score_and_alert(request("U1", 0));
  REQUIRE(out.alert);
  CHECK(out.alert->reason == AlertReason::Malicious);
  CHECK(out.alert->status == AlertStatus::Open);
  CHECK(out.probability == doctest::Approx(0.95).epsilon(1e-12));

  svc.install_model(constant_model(0.45));
  out = svc.score_and_alert(request("U1", 1));
  REQUIRE(out.alert);
  CHECK(out.alert->reason == AlertReason::LowConfidence);
  CHECK(out.alert->confidence == doctest::Approx(0.1).epsilon(1e-9));

  svc.install_model(constant_model(0.10));
  out = svc.score_and_alert(request("U1", 2));
  CHECK_FALSE(out.alert);
  CHECK(svc.alerts().size() == 2);
}

TEST_CASE("a user-day is alerted once per model version") {
  AlertService svc({});
  svc.install_model(constant_model(0.9));
  const auto first = svc.score_and_alert(request("U1", 0));
  const auto again = svc.score_and_alert(request("U1", 0, 99));
  CHECK_FALSE(first.repeated);
  CHECK(again.repeated);
  REQUIRE(again.alert);
  CHECK(again.alert->id == first.alert->id);
  CHECK(svc.alerts().size() == 1);

  svc.install_model(constant_model(0.9));
  const auto fresh = svc.score_and_alert(request("U1", 0));
  CHECK_FALSE(fresh.repeated);
  CHECK(fresh.alert->id != first.alert->id);
  CHECK(fresh.alert->model_version == 2);
}

TEST_CASE("labels close alerts, grow the pool and cannot be repeated") {
  AlertService svc({});
  svc.install_model(constant_model(0.9));
  const auto id = svc.score_and_alert(request("U1", 0)).alert->id;
  const auto a = svc.submit_label(id, Verdict::Benign, "ana");
  CHECK(a.status == AlertStatus::LabeledBenign);
  CHECK(a.analyst == "ana");
  CHECK(svc.pool_size() == 1);
  CHECK(svc.alerts(AlertStatus::Open).empty());
  CHECK(code_of([&] { svc.submit_label(id, Verdict::Malicious, "ana"); }) == ErrorCode::AlreadyLabeled);
  CHECK(code_of([&] { svc.submit_label("A999999", Verdict::Benign, "ana"); }) == ErrorCode::UnknownAlert);
  CHECK(svc.pool_size() == 1);
}

TEST_CASE("property: open alerts come malicious first, then by ascending confidence") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.4, 0.999);
  for (int trial = 0; trial < 5; ++trial) {
    AlertService svc({});
    for (int k = 0; k < 25; ++k) {
      svc.install_model(constant_model(u(rng)));
      svc.score_and_alert(request("U" + std::to_string(k), k));
    }
    const auto open = svc.alerts(AlertStatus::Open);
    REQUIRE(open.size() == 25);
    for (std::size_t i = 1; i < open.size(); ++i) {
      const auto& a = open[i - 1];
      const auto& b = open[i];
      const bool ordered = (a.reason == AlertReason::Malicious && b.reason == AlertReason::LowConfidence) ||
                           (a.reason == b.reason && a.confidence <= b.confidence);
      CHECK(ordered);
    }
  }
}

TEST_CASE("state directory replays alerts, labels, encodings and the served version") {
  const auto dir = fresh_dir("cb_service_state");
  std::vector<Alert> before;
  {
    AlertService svc({}, dir);
    svc.install_model(constant_model(0.9));
    svc.install_model(constant_model(0.45));
    for (int k = 0; k < 4; ++k) svc.score_and_alert(request("U" + std::to_string(k), k, static_cast<std::uint64_t>(k)));
    svc.submit_label(svc.alerts()[1].id, Verdict::Malicious, "ana");
    svc.rollback(1);
    before = svc.alerts();
  }
  // a torn trailing line from a crash is ignored
  std::ofstream(dir / "alerts.jsonl", std::ios::app) << "{\"type\":\"lab";

  AlertService svc({}, dir);
  CHECK(svc.model_version() == 1);
  CHECK(svc.pool_size() == 1);
  const auto after = svc.alerts();
  REQUIRE(after.size() == before.size());
  for (std::size_t i = 0; i < after.size(); ++i) CHECK(alert_to_json(after[i]) == alert_to_json(before[i]));
  CHECK(svc.encoding(after[2].id)->pixels == request("U2", 2, 2).image.pixels);
  CHECK(code_of([&] { svc.submit_label(after[1].id, Verdict::Benign, "x"); }) == ErrorCode::AlreadyLabeled);
  // ids keep increasing after a restart
  svc.install_model(constant_model(0.9));
  const auto next = svc.score_and_alert(request("U9", 9)).alert->id;
  CHECK(std::none_of(before.begin(), before.end(), [&](const Alert& a) { return a.id == next; }));
  fs::remove_all(dir);
}

TEST_CASE("rollback serves an earlier version and rejects unknown ones") {
  AlertService svc({});
  svc.install_model(constant_model(0.9));
  svc.install_model(constant_model(0.2));
  CHECK(svc.model_version() == 2);
  svc.rollback(1);
  CHECK(svc.model_version() == 1);
  CHECK(svc.score_and_alert(request("U1", 0)).probability == doctest::Approx(0.9));
  CHECK(code_of([&] { svc.rollback(7); }) == ErrorCode::InvalidArgument);
  // a new install numbers after the highest stored version
  CHECK(svc.install_model(constant_model(0.3)) == 3);
}

TEST_CASE("retrain needs a full pool") {
  ServiceConfig cfg;
  cfg.retrain_batch_min = 2;
  AlertService svc(cfg);
  svc.install_model(constant_model(0.9));
  CHECK(code_of([&] { svc.retrain(); }) == ErrorCode::PoolTooSmall);
  svc.submit_label(svc.score_and_alert(request("U1", 0)).alert->id, Verdict::Benign, "a");
  CHECK(code_of([&] { svc.retrain(); }) == ErrorCode::PoolTooSmall);
}

TEST_CASE("retraining on already-correct labels keeps metrics within 0.02") {
  const auto& t = toy_detector();
  const auto before = detector::evaluate(t.model, t.test);
  REQUIRE(before.f1 > 0.9);

  ServiceConfig cfg;
  cfg.retrain_batch_min = 4;
  AlertService svc(cfg);
  svc.set_training_data(t.train, t.val);
  svc.set_evaluation_set(t.test);
  svc.install_model(t.model);
  std::size_t labeled = 0;
  for (const auto& s : t.val) {
    const auto out = svc.score_and_alert({s.image.user, s.image.date, s.image, {s.nd}, std::nullopt});
    if (!out.alert || (out.probability >= 0.5) != (s.label == 1)) continue;
    svc.submit_label(out.alert->id, s.label ? Verdict::Malicious : Verdict::Benign, "oracle");
    ++labeled;
  }
  REQUIRE(labeled >= 4);
  CHECK(svc.retrain() == 2);
  const auto after = detector::evaluate(*svc.model(), t.test);
  CHECK(std::abs(after.balanced_accuracy - before.balanced_accuracy) <= 0.02);
  CHECK(std::abs(after.f1 - before.f1) <= 0.02);
  CHECK(std::abs(after.precision - before.precision) <= 0.02);
  CHECK(std::abs(after.recall - before.recall) <= 0.02);

  const auto m = json::parse(svc.metrics_json());
  CHECK(m["model_version"] == 2);
  CHECK(m["evaluation"]["f1"].get<double>() == doctest::Approx(after.f1));
}

TEST_CASE("loop-in simulation does not lower test precision") {
  const auto& t = toy_detector();
  ServiceConfig cfg;
  cfg.retrain_batch_min = 1;
  const auto rep = loop_in_simulation(t.model, t.train, t.val, t.test, cfg);
  CHECK(rep.scored == t.val.size());
  CHECK(rep.alerts == rep.labeled_benign + rep.labeled_malicious);
  CHECK(rep.version_after == rep.version_before + 1);
  CHECK(rep.after.precision >= rep.before.precision);
  const auto j = json::parse(rep.to_json());
  CHECK(j["after"]["precision"].get<double>() == rep.after.precision);
}

TEST_CASE("HTTP API serves the alert queue, labels, images and model state") {
  ServiceConfig cfg;
  cfg.retrain_batch_min = 5;
  AlertService svc(cfg);
  for (double p : {0.45, 0.97, 0.7}) {
    svc.install_model(constant_model(p));
    svc.score_and_alert(request("U" + std::to_string(static_cast<int>(p * 100)), 3));
  }
  HttpApi api(svc, {});
  const int port = api.bind_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread server([&] { api.run(); });
  httplib::Client cli("127.0.0.1", port);
  cli.set_connection_timeout(5);

  auto res = cli.Get("/api/alerts?status=open");
  REQUIRE(res);
  CHECK(res->status == 200);
  auto queue = json::parse(res->body);
  REQUIRE(queue.size() == 3);
  CHECK(queue[0]["reason"] == "malicious");
  CHECK(queue[0]["probability"].get<double>() == doctest::Approx(0.7));
  CHECK(queue[1]["probability"].get<double>() == doctest::Approx(0.97));
  CHECK(queue[2]["reason"] == "low_confidence");
  const std::string id = queue[0]["id"];

  res = cli.Get("/api/alerts/" + id);
  REQUIRE(res);
  CHECK(res->status == 200);
  auto detail = json::parse(res->body);
  CHECK(detail["id"] == id);
  CHECK(detail["attribution"].is_array());
  CHECK(detail["colorfulness"].get<double>() >= 0);

  res = cli.Get("/api/alerts/" + id + "/encoding.png");
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(res->get_header_value("Content-Type") == "image/png");
  const auto img = eval::read_color_png(std::span(reinterpret_cast<const std::uint8_t*>(res->body.data()), res->body.size()));
  CHECK(img.pixels == svc.encoding(id)->pixels);

  CHECK(cli.Get("/api/alerts/nope")->status == 404);
  CHECK(cli.Get("/api/alerts?status=weird")->status == 400);

  const auto label_path = "/api/alerts/" + id + "/label";
  res = cli.Post(label_path, R"({"label":"malicious","analyst":"ana"})", "application/json");
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(json::parse(res->body)["status"] == "labeled_malicious");
  CHECK(cli.Post(label_path, R"({"label":"benign"})", "application/json")->status == 409);
  CHECK(cli.Post("/api/alerts/A424242/label", R"({"label":"benign"})", "application/json")->status == 404);
  CHECK(cli.Post("/api/alerts/" + std::string(queue[1]["id"]) + "/label", R"({"label":"maybe"})", "application/json")->status == 400);
  CHECK(cli.Post("/api/alerts/" + std::string(queue[1]["id"]) + "/label", "not json", "application/json")->status == 400);
  CHECK(json::parse(cli.Get("/api/alerts?status=open")->body).size() == 2);

  res = cli.Post("/api/retrain", "", "application/json");
  REQUIRE(res);
  CHECK(res->status == 409);
  CHECK(json::parse(res->body)["error"] == "PoolTooSmall");

  auto version = json::parse(cli.Get("/api/model/version")->body);
  CHECK(version["version"] == 3);
  CHECK(version["pool"] == 1);
  auto metrics = json::parse(cli.Get("/api/metrics")->body);
  CHECK(metrics["alerts"]["open"] == 2);
  CHECK(metrics["alerts"]["labeled_malicious"] == 1);
  CHECK(metrics["evaluation"].is_null());

  // raw-feature scoring needs an encoder
  CHECK(cli.Post("/api/score", R"({"user":"U1","date":"2010-01-05"})", "application/json")->status == 503);

  api.stop();
  server.join();
}
