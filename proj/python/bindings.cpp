// Python bindings over the core library. Images cross the boundary as
// uint8 numpy arrays: (32, 32) greyscale, (32, 32, 3) colour.

#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <algorithm>

#include "chromabehave/conical.hpp"
#include "chromabehave/detector.hpp"
#include "chromabehave/encoder.hpp"
#include "chromabehave/encoding_eval.hpp"
#include "chromabehave/explain.hpp"
#include "chromabehave/features.hpp"
#include "chromabehave/service.hpp"
#include "chromabehave/synth.hpp"

namespace py = pybind11;
using namespace chromabehave;

namespace {

using U8Array = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

encoder::ColorEncoding color_from_array(const U8Array& a) {
  if (a.ndim() != 3 || a.shape(0) != encoder::kImageSide || a.shape(1) != encoder::kImageSide || a.shape(2) != 3)
    throw py::value_error("expected a (32, 32, 3) uint8 array");
  encoder::ColorEncoding img;
  std::copy_n(a.data(), img.pixels.size(), img.pixels.begin());
  return img;
}

U8Array color_to_array(const encoder::ColorEncoding& img) {
  U8Array out({encoder::kImageSide, encoder::kImageSide, 3});
  std::copy(img.pixels.begin(), img.pixels.end(), out.mutable_data());
  return out;
}

U8Array grey_to_array(const encoder::GreyPixels& g) {
  U8Array out({encoder::kImageSide, encoder::kImageSide});
  std::copy(g.begin(), g.end(), out.mutable_data());
  return out;
}

features::FeatureVector feature_vector(const std::vector<double>& v) {
  if (v.size() != features::kFeatureCount)
    throw py::value_error("expected " + std::to_string(features::kFeatureCount) + " feature values");
  features::FeatureVector f{};
  std::copy(v.begin(), v.end(), f.begin());
  return f;
}

py::dict attribution_dict(const explain::AttributionReport& r) {
  py::list players;
  for (const auto& p : r.players) {
    py::dict d;
    d["name"] = p.name;
    d["shapley"] = p.shapley;
    d["shapley_se"] = p.shapley_se;
    d["banzhaf"] = p.banzhaf;
    d["mean_when_included"] = p.mean_when_included;
    d["remove_individual"] = p.remove_individual;
    d["include_individual"] = p.include_individual;
    players.append(d);
  }
  py::dict out;
  out["players"] = players;
  out["value_full"] = r.value_full;
  out["value_empty"] = r.value_empty;
  out["permutations"] = r.permutations;
  out["subsets"] = r.subsets;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Colour-encoded user behaviour analytics: native core";

  py::register_exception<Error>(m, "ChromabehaveError");

  m.attr("FEATURE_NAMES") = [] {
    std::vector<std::string> names(features::kFeatureNames.begin(), features::kFeatureNames.end());
    return names;
  }();

  // ---- features
  m.def(
      "file_path_variance",
      [](const std::vector<std::pair<std::string, std::string>>& accessed) {
        auto tree = features::FileTree::build(accessed);
        std::vector<features::FileTree::NodeId> ids;
        for (const auto& [machine, path] : accessed) ids.push_back(*tree.find_leaf(machine, path));
        return features::file_path_variance(tree, ids);
      },
      py::arg("accessed"),
      "Mean squared pairwise tree distance over the distinct (machine, path) files accessed.");

  // ---- conical
  py::class_<conical::ConicalModel>(m, "ConicalModel")
      .def_static(
          "fit",
          [](const std::string& name, const std::vector<std::string>& docs,
             const std::unordered_map<std::string, double>& dictionary, double tol) {
            return conical::ConicalModel::fit(name, docs, ingest::FrequencyDict(dictionary), tol);
          },
          py::arg("name"), py::arg("documents"), py::arg("dictionary"),
          py::arg("residual_tol") = conical::ConicalModel::kDefaultResidualTol)
      .def_static("load", &conical::ConicalModel::load)
      .def("save", &conical::ConicalModel::save)
      .def("classify", &conical::ConicalModel::classify_text, py::arg("text"))
      .def_property_readonly("name", &conical::ConicalModel::name);

  // ---- encoder
  py::class_<encoder::SaeModel>(m, "SaeModel")
      .def_static("load", &encoder::SaeModel::load)
      .def("save", &encoder::SaeModel::save)
      .def(
          "encode",
          [](const encoder::SaeModel& sae, const std::vector<double>& f) {
            return grey_to_array(encoder::encode_grey(sae, feature_vector(f)).pixels);
          },
          py::arg("features"), "Greyscale (32, 32) encoding of one 25-feature vector.")
      .def(
          "compose",
          [](const encoder::SaeModel& sae, const std::vector<double>& current, const std::vector<double>& ctx1,
             const std::vector<double>& ctx2) {
            return color_to_array(encoder::compose(encoder::Representation::Daily,
                                                   encoder::encode_grey(sae, feature_vector(current)),
                                                   encoder::encode_grey(sae, feature_vector(ctx1)),
                                                   encoder::encode_grey(sae, feature_vector(ctx2))));
          },
          py::arg("current"), py::arg("context1"), py::arg("context2"),
          "Colour encoding: R from the current day, G and B from the two context vectors.");

  // ---- encoding evaluation
  m.def("colorfulness", [](const U8Array& img) { return eval::colorfulness(color_from_array(img)); }, py::arg("image"));
  m.def(
      "point_biserial",
      [](const std::vector<double>& values, const std::vector<int>& labels) { return eval::point_biserial(values, labels); },
      py::arg("values"), py::arg("labels"));

  // ---- detector
  py::class_<detector::DetectionModel>(m, "DetectionModel")
      .def_static("load", &detector::DetectionModel::load)
      .def("save", &detector::DetectionModel::save)
      .def_readonly("roles", &detector::DetectionModel::roles)
      .def(
          "predict",
          [](const detector::DetectionModel& model, const U8Array& img, const std::vector<double>& nd) {
            if (static_cast<int>(nd.size()) != model.params.nd_dim())
              throw py::value_error("non-dynamic vector has the wrong width");
            detector::NonDynamicFeatures v{Eigen::Map<const Eigen::VectorXd>(nd.data(), static_cast<Eigen::Index>(nd.size()))};
            return detector::predict(model, color_from_array(img), v);
          },
          py::arg("image"), py::arg("non_dynamic"), "Malicious probability for one colour encoding.");

  // ---- synthetic corpus
  m.def("derived_scenario_days", &synth::derived_scenario_days, py::arg("n_users"), py::arg("n_days"));
  m.def(
      "generate_corpus",
      [](const std::filesystem::path& out, int n_users, int n_days, std::uint64_t seed) {
        synth::ScenarioConfig cfg;
        cfg.n_users = n_users;
        cfg.n_days = n_days;
        cfg.seed = seed;
        const auto corpus = synth::generate(cfg);
        synth::write_corpus(corpus, cfg, out);
        std::size_t malicious = 0;
        for (const auto& [key, label] : corpus.labels) malicious += features::is_malicious(label);
        py::dict d;
        d["events"] = corpus.events.size();
        d["users"] = corpus.ldap.size();
        d["user_days"] = corpus.labels.size();
        d["malicious_days"] = malicious;
        return d;
      },
      py::arg("out"), py::arg("n_users") = 200, py::arg("n_days") = 120, py::arg("seed") = 7);

  // ---- explanations
  m.def("exact_shapley", &explain::exact_shapley, py::arg("value"), py::arg("n_players"),
        "Exact Shapley values; `value` maps a coalition bitmask to a float.");
  m.def(
      "attribute",
      [](const explain::ValueFn& value, int n, int permutations, int subsets, std::uint64_t seed) {
        return attribution_dict(explain::attribute(value, n, {permutations, subsets, seed}));
      },
      py::arg("value"), py::arg("n_players"), py::arg("permutations") = 200, py::arg("subsets") = 512,
      py::arg("seed") = 7);

  // ---- service
  m.def(
      "alert_reason",
      [](double p, double threshold) -> std::optional<std::string> {
        const auto r = service::alert_reason(p, threshold);
        if (!r) return std::nullopt;
        return std::string(service::reason_name(*r));
      },
      py::arg("probability"), py::arg("threshold") = 0.4);
  m.def("confidence", &service::confidence_of, py::arg("probability"));
}
