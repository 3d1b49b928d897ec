// Eigen must come before httplib: <resolv.h> defines a `_res` macro that
// collides with Eigen parameter names.
#include "chromabehave/encoding_eval.hpp"
#include "chromabehave/service.hpp"

#include <httplib.h>

#include <json.hpp>
#include <unordered_map>

namespace chromabehave::service {

namespace {

using nlohmann::json;

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownAlert: return 404;
    case ErrorCode::AlreadyLabeled:
    case ErrorCode::PoolTooSmall: return 409;
    case ErrorCode::ModelUnavailable: return 503;
    case ErrorCode::Io: return 500;
    default: return 400;
  }
}

void send_json(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, std::string_view code, const std::string& message) {
  send_json(res, json{{"error", code}, {"message", message}}, status);
}

template <class F>
httplib::Server::Handler guarded(F f) {
  return [f](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const Error& e) {
      send_error(res, http_status(e.code()), to_string(e.code()), e.what());
    } catch (const json::exception& e) {
      send_error(res, 400, "InvalidArgument", e.what());
    }
  };
}

features::FeatureVector feature_array(const json& j) {
  if (!j.is_array() || j.size() != features::kFeatureCount)
    fail(ErrorCode::DimensionMismatch, "expected " + std::to_string(features::kFeatureCount) + " feature values");
  features::FeatureVector f{};
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = j[i].get<double>();
  return f;
}

}  // namespace

struct HttpApi::Impl {
  AlertService& svc;
  Options opts;
  httplib::Server server;
  std::unordered_map<std::string, const ingest::LdapRecord*> by_user;

  Impl(AlertService& s, Options o) : svc(s), opts(std::move(o)) {
    for (const auto& r : opts.ldap) by_user[r.user] = &r;
    routes();
  }

  void routes() {
    server.Get("/api/alerts", guarded([this](const httplib::Request& req, httplib::Response& res) {
      std::optional<AlertStatus> status;
      if (req.has_param("status")) status = status_from_name(req.get_param_value("status"));
      json arr = json::array();
      for (const auto& a : svc.alerts(status)) arr.push_back(json::parse(alert_to_json(a)));
      send_json(res, arr);
    }));

    server.Get(R"(/api/alerts/([^/]+)/encoding\.png)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto img = svc.encoding(req.matches[1]);
      if (!img) fail(ErrorCode::UnknownAlert, "no alert '" + std::string(req.matches[1]) + "'");
      const auto png = eval::write_png(*img);
      res.set_content(std::string(png.begin(), png.end()), "image/png");
    }));

    server.Get(R"(/api/alerts/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const std::string id = req.matches[1];
      const auto alert = svc.find(id);
      if (!alert) fail(ErrorCode::UnknownAlert, "no alert '" + id + "'");
      json body = json::parse(alert_to_json(*alert));
      json attr = json::array();
      for (const auto& a : svc.attribution_snippet(id))
        attr.push_back({{"feature", a.feature}, {"value", a.value}, {"contribution", a.contribution}});
      body["attribution"] = attr;
      if (const auto img = svc.encoding(id)) body["colorfulness"] = eval::colorfulness(*img);
      send_json(res, body);
    }));

    server.Post(R"(/api/alerts/([^/]+)/label)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto body = json::parse(req.body);
      const auto verdict = verdict_from_name(body.at("label").get<std::string>());
      const auto analyst = body.value("analyst", "");
      send_json(res, json::parse(alert_to_json(svc.submit_label(req.matches[1], verdict, analyst))));
    }));

    server.Post("/api/retrain", guarded([this](const httplib::Request&, httplib::Response& res) {
      const int v = svc.retrain();
      send_json(res, json{{"version", v}, {"pool", svc.pool_size()}});
    }));

    server.Get("/api/model/version", guarded([this](const httplib::Request&, httplib::Response& res) {
      send_json(res, json{{"version", svc.model_version()},
                          {"pool", svc.pool_size()},
                          {"retrain_batch_min", svc.config().retrain_batch_min}});
    }));

    server.Get("/api/metrics", guarded([this](const httplib::Request&, httplib::Response& res) {
      res.set_content(svc.metrics_json(), "application/json");
    }));

    // Daily scoring from raw feature vectors: today plus the two previous days.
    server.Post("/api/score", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto body = json::parse(req.body);
      const auto* sae = svc.encoder();
      if (!sae) fail(ErrorCode::ModelUnavailable, "service has no encoder for raw feature scoring");
      const auto model = svc.model();
      if (!model) fail(ErrorCode::ModelUnavailable, "no model installed");
      ScoreRequest sr;
      sr.user = body.at("user").get<std::string>();
      sr.date = Date::parse_iso(body.at("date").get<std::string>());
      const auto today = feature_array(body.at("features"));
      const auto& ctx = body.at("context");
      if (!ctx.is_array() || ctx.size() != 2) fail(ErrorCode::InvalidArgument, "context needs two feature vectors");
      const auto cur = encoder::encode_grey(*sae, today, sr.user, sr.date);
      const auto c1 = encoder::encode_grey(*sae, feature_array(ctx[0]));
      const auto c2 = encoder::encode_grey(*sae, feature_array(ctx[1]));
      sr.image = encoder::compose(encoder::Representation::Daily, cur, c1, c2);
      sr.features = today;
      if (body.contains("nd")) {
        const auto v = body["nd"].get<std::vector<double>>();
        sr.nd.values = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
      } else {
        const ingest::LdapRecord unknown;
        auto it = by_user.find(sr.user);
        sr.nd = detector::non_dynamic(model->roles, it == by_user.end() ? unknown : *it->second);
      }
      if (sr.nd.values.size() != model->params.nd_dim())
        fail(ErrorCode::ShapeMismatch, "non-dynamic vector width does not match the model");
      const auto out = svc.score_and_alert(sr);
      send_json(res, json{{"probability", out.probability},
                          {"repeated", out.repeated},
                          {"alert", out.alert ? json::parse(alert_to_json(*out.alert)) : json(nullptr)}});
    }));

    if (opts.ui_dir) server.set_mount_point("/", opts.ui_dir->string());
  }
};

HttpApi::HttpApi(AlertService& service, Options opts) : impl_(std::make_unique<Impl>(service, std::move(opts))) {}
HttpApi::~HttpApi() = default;

bool HttpApi::listen(const std::string& host, int port) { return impl_->server.listen(host, port); }
int HttpApi::bind_any_port(const std::string& host) { return impl_->server.bind_to_any_port(host); }
bool HttpApi::run() { return impl_->server.listen_after_bind(); }
void HttpApi::stop() { impl_->server.stop(); }

}  // namespace chromabehave::service
