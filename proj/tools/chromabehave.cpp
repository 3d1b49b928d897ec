#include <CLI11.hpp>
#include <atomic>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <random>
#include <set>
#include <sstream>

#include "chromabehave/encoding_eval.hpp"
#include "chromabehave/explain.hpp"
#include "chromabehave/pipeline.hpp"
#include "chromabehave/service.hpp"
#include "run_dir.hpp"

using namespace chromabehave;
using namespace chromabehave::cli;
using nlohmann::json;

namespace {

json metrics_json(const detector::Metrics& m) {
  return {{"tp", m.tp},
          {"fp", m.fp},
          {"tn", m.tn},
          {"fn", m.fn},
          {"balanced_accuracy", m.balanced_accuracy},
          {"precision", m.precision},
          {"recall", m.recall},
          {"f1", m.f1}};
}

json train_report_json(const detector::TrainReport& r) {
  return {{"train_loss", r.train_loss},
          {"val_f1", r.val_f1},
          {"val_loss", r.val_loss},
          {"best_epoch", r.best_epoch},
          {"train_size", r.train_size}};
}

void print_metrics(const char* name, const detector::Metrics& m) {
  std::printf("%s: BA %.4f  precision %.4f  recall %.4f  F1 %.4f  (tp %zu fp %zu tn %zu fn %zu)\n", name,
              m.balanced_accuracy, m.precision, m.recall, m.f1, m.tp, m.fp, m.tn, m.fn);
}

std::set<features::Label> parse_holdout(const std::string& spec) {
  std::set<features::Label> out;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = to_lower(trim(item));
    if (item.empty()) continue;
    if (item.size() == 2 && item[0] == 's') item = "scenario" + item.substr(1);
    out.insert(features::label_from_name(item));
  }
  return out;
}

std::vector<detector::Sample> dataset_samples(const std::vector<encoder::EncodedDay>& data,
                                              const std::vector<std::size_t>& index,
                                              const std::vector<ingest::LdapRecord>& ldap,
                                              const std::vector<std::string>& roles) {
  return pipeline::samples(data, index, ldap, roles);
}

std::vector<std::size_t> all_indices(std::size_t n) {
  std::vector<std::size_t> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = i;
  return v;
}

std::vector<std::size_t> subset_of(const synth::Splits& s, const std::string& name, std::size_t n) {
  if (name == "train") return s.train;
  if (name == "val") return s.val;
  if (name == "test") return s.test;
  if (name == "all") return all_indices(n);
  fail(ErrorCode::InvalidArgument, "unknown subset '" + name + "'");
}

/// Evaluation rows for attribution: every malicious row plus benign rows
/// drawn without replacement up to `cap` in total, in ascending index order.
std::vector<std::size_t> explain_rows(const RunData& run, const std::vector<std::size_t>& pool, std::size_t cap,
                                      std::uint64_t seed) {
  std::vector<std::size_t> mal, ben;
  for (std::size_t i : pool) (features::is_malicious(run.dataset[i].label) ? mal : ben).push_back(i);
  std::mt19937_64 rng(seed);
  std::shuffle(ben.begin(), ben.end(), rng);
  const std::size_t keep_benign = cap > mal.size() ? cap - mal.size() : 0;
  if (ben.size() > keep_benign) ben.resize(keep_benign);
  std::vector<std::size_t> out = mal;
  out.insert(out.end(), ben.begin(), ben.end());
  std::sort(out.begin(), out.end());
  return out;
}

std::atomic<service::HttpApi*> g_api{nullptr};

void on_signal(int) {
  if (auto* api = g_api.load()) api->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"chromabehave: insider-threat detection on colour-encoded user behavior"};
  app.require_subcommand(1);

  // ---- synth
  auto* synth_cmd = app.add_subcommand("synth", "Generate a labeled synthetic audit-log corpus");
  synth::ScenarioConfig scfg;
  std::string synth_out, synth_start;
  synth_cmd->add_option("--users", scfg.n_users, "Number of users")->capture_default_str();
  synth_cmd->add_option("--days", scfg.n_days, "Number of days")->capture_default_str();
  synth_cmd->add_option("--seed", scfg.seed, "Random seed")->capture_default_str();
  synth_cmd->add_option("--team-size", scfg.team_size)->capture_default_str();
  synth_cmd->add_option("--domain", scfg.domain)->capture_default_str();
  synth_cmd->add_option("--start", synth_start, "First day (YYYY-MM-DD)");
  synth_cmd->add_option("--out", synth_out, "Output directory")->required();

  // ---- ingest
  auto* ingest_cmd = app.add_subcommand("ingest", "Parse CERT-format logs into an event store");
  std::string ing_logs, ing_ldap, ing_dict, ing_out, ing_psych, ing_labels;
  bool ing_strict = false;
  ingest_cmd->add_option("--logs", ing_logs, "Directory with logon/device/file/email/http CSVs")->required();
  ingest_cmd->add_option("--ldap", ing_ldap, "LDAP snapshot directory or file")->required();
  ingest_cmd->add_option("--dict", ing_dict, "Word frequency file (word,count)")->required();
  ingest_cmd->add_option("--psychometric", ing_psych, "Psychometric CSV");
  ingest_cmd->add_option("--labels", ing_labels, "Ground truth labels.csv to carry along");
  ingest_cmd->add_option("--out", ing_out, "Store directory")->required();
  ingest_cmd->add_flag("--strict", ing_strict, "Abort on the first malformed row");

  // ---- features
  auto* feat_cmd = app.add_subcommand("features", "Extract the 25 daily behavior features");
  std::string fe_store, fe_out, fe_labels, fe_detectors, fe_corpora, fe_domain = "dtaa.com";
  feat_cmd->add_option("--store", fe_store, "Event store directory")->required();
  feat_cmd->add_option("--out", fe_out, "Features CSV")->required();
  feat_cmd->add_option("--labels", fe_labels, "labels.csv (default: store/labels.csv if present)");
  feat_cmd->add_option("--detectors", fe_detectors, "Directory of fitted topic detectors");
  feat_cmd->add_option("--corpora", fe_corpora, "Topic corpora to fit detectors from");
  feat_cmd->add_option("--domain", fe_domain, "Organization email domain")->capture_default_str();

  // ---- cc
  auto* cc_cmd = app.add_subcommand("cc", "Conical topic classifier");
  cc_cmd->require_subcommand(1);
  auto* cc_fit = cc_cmd->add_subcommand("fit", "Fit a detector from a positive corpus");
  std::string cc_corpus, cc_dict, cc_out, cc_model, cc_text, cc_name;
  double cc_tol = conical::ConicalModel::kDefaultResidualTol;
  double cc_eps = conical::NeTfVectorizer::kDefaultEpsilon;
  cc_fit->add_option("--corpus", cc_corpus, "Directory of .txt documents")->required();
  cc_fit->add_option("--dict", cc_dict, "Word frequency file")->required();
  cc_fit->add_option("--out", cc_out, "Model file")->required();
  cc_fit->add_option("--name", cc_name, "Topic name");
  cc_fit->add_option("--tol", cc_tol, "Relative residual tolerance")->capture_default_str();
  cc_fit->add_option("--epsilon", cc_eps, "Quantile clamp")->capture_default_str();
  auto* cc_classify = cc_cmd->add_subcommand("classify", "Classify a text file");
  std::optional<double> cc_tol_override;
  cc_classify->add_option("--model", cc_model)->required();
  cc_classify->add_option("--text", cc_text)->required();
  cc_classify->add_option("--tol", cc_tol_override, "Override the stored tolerance");

  // ---- sae
  auto* sae_cmd = app.add_subcommand("sae", "Sparse autoencoder");
  sae_cmd->require_subcommand(1);
  auto* sae_train = sae_cmd->add_subcommand("train", "Train the encoder on a features CSV");
  encoder::SaeHyper hyper;
  std::string sae_features, sae_out, sae_model, sae_enc_out;
  sae_train->add_option("--features", sae_features)->required();
  sae_train->add_option("--out", sae_out)->required();
  sae_train->add_option("--epochs", hyper.epochs)->capture_default_str();
  sae_train->add_option("--lr", hyper.lr)->capture_default_str();
  sae_train->add_option("--batch", hyper.batch)->capture_default_str();
  sae_train->add_option("--patience", hyper.patience)->capture_default_str();
  sae_train->add_option("--seed", hyper.seed)->capture_default_str();
  auto* sae_encode = sae_cmd->add_subcommand("encode", "Write one greyscale PNG per feature row");
  sae_encode->add_option("--model", sae_model)->required();
  sae_encode->add_option("--features", sae_features)->required();
  sae_encode->add_option("--out", sae_enc_out)->required();

  // ---- compose
  auto* compose_cmd = app.add_subcommand("compose", "Compose RGB encodings with context channels");
  std::string co_features, co_sae, co_ldap, co_out, co_rep = "daily";
  compose_cmd->add_option("--features", co_features)->required();
  compose_cmd->add_option("--sae", co_sae)->required();
  compose_cmd->add_option("--rep", co_rep, "daily|historical|role")->capture_default_str();
  compose_cmd->add_option("--ldap", co_ldap, "Needed for the role representation");
  compose_cmd->add_option("--out", co_out)->required();

  // ---- augment
  auto* aug_cmd = app.add_subcommand("augment", "Add augmented copies of malicious encodings");
  std::string au_images, au_out;
  bool au_swap = false;
  int au_replace = 0;
  std::uint64_t au_seed = 7;
  aug_cmd->add_option("--images", au_images)->required();
  aug_cmd->add_flag("--swap", au_swap, "Add a context-swapped copy");
  aug_cmd->add_option("--replace", au_replace, "Context-replacement copies per malicious day")->capture_default_str();
  aug_cmd->add_option("--seed", au_seed)->capture_default_str();
  aug_cmd->add_option("--out", au_out)->required();

  // ---- eval
  auto* eval_cmd = app.add_subcommand("eval", "Encoding evaluation");
  eval_cmd->require_subcommand(1);
  auto* cc_corr = eval_cmd->add_subcommand("color-corr", "Colorfulness vs maliciousness correlation");
  std::string ev_images, ev_out, ev_rep = "daily";
  cc_corr->add_option("--images", ev_images)->required();
  cc_corr->add_option("--rep", ev_rep)->capture_default_str();
  cc_corr->add_option("--out", ev_out, "Per-image colorfulness CSV");

  // ---- detect
  auto* det_cmd = app.add_subcommand("detect", "CNN detector");
  det_cmd->require_subcommand(1);
  detector::DetectorConfig dcfg;
  synth::SplitSpec split_spec;
  std::string de_images, de_ldap, de_out, de_model, de_split, de_holdout, de_subset = "test", de_target = "malicious";
  bool de_no_swap = false;
  auto* det_train = det_cmd->add_subcommand("train", "Train on a composed image dataset");
  det_train->add_option("--images", de_images)->required();
  det_train->add_option("--ldap", de_ldap)->required();
  det_train->add_option("--out", de_out, "Model file")->required();
  det_train->add_option("--split-out", de_split, "Where to write the split indices");
  det_train->add_option("--epochs", dcfg.epochs)->capture_default_str();
  det_train->add_option("--lr", dcfg.lr)->capture_default_str();
  det_train->add_option("--batch", dcfg.batch)->capture_default_str();
  det_train->add_option("--seed", dcfg.seed)->capture_default_str();
  det_train->add_option("--replace", dcfg.augment.replace, "Replacement copies per malicious day")->capture_default_str();
  det_train->add_flag("--no-swap", de_no_swap);
  det_train->add_option("--holdout", de_holdout, "Scenarios kept out of training, e.g. s1,s3");
  auto* det_eval = det_cmd->add_subcommand("eval", "Metrics on a split subset");
  det_eval->add_option("--model", de_model)->required();
  det_eval->add_option("--images", de_images)->required();
  det_eval->add_option("--ldap", de_ldap)->required();
  det_eval->add_option("--split", de_split, "Split file (default: recomputed from --seed)");
  det_eval->add_option("--subset", de_subset, "train|val|test|all")->capture_default_str();
  det_eval->add_option("--seed", split_spec.seed)->capture_default_str();
  det_eval->add_option("--out", de_out, "Metrics JSON");
  auto* det_predict = det_cmd->add_subcommand("predict", "Probabilities for every image");
  det_predict->add_option("--model", de_model)->required();
  det_predict->add_option("--images", de_images)->required();
  det_predict->add_option("--ldap", de_ldap)->required();
  det_predict->add_option("--out", de_out, "CSV")->required();
  auto* det_actmax = det_cmd->add_subcommand("actmax", "Activation maximization image");
  detector::ActMaxConfig amcfg;
  det_actmax->add_option("--model", de_model)->required();
  det_actmax->add_option("--target", de_target, "malicious|benign")->capture_default_str();
  det_actmax->add_option("--steps", amcfg.steps)->capture_default_str();
  det_actmax->add_option("--seed", amcfg.seed)->capture_default_str();
  det_actmax->add_option("--out", de_out, "PNG")->required();

  // ---- explain
  auto* ex_cmd = app.add_subcommand("explain", "Feature attributions for a trained detector");
  std::string ex_model, ex_features, ex_out, ex_run;
  explain::AttributionConfig acfg;
  explain::ExplainerConfig xcfg;
  std::size_t ex_rows = 300;
  bool ex_marginal = false;
  ex_cmd->add_option("--model", ex_model, "Detector model (default: RUN/detector.json)");
  ex_cmd->add_option("--run", ex_run, "Run directory from `pipeline`")->required();
  ex_cmd->add_option("--features", ex_features, "Players, e.g. FPV,FPV_After,CC_*")->required();
  ex_cmd->add_option("--out", ex_out, "Report JSON")->required();
  ex_cmd->add_option("--eval-rows", ex_rows, "Test rows used (all malicious + sampled benign)")->capture_default_str();
  ex_cmd->add_option("--permutations", acfg.permutations)->capture_default_str();
  ex_cmd->add_option("--subsets", acfg.subsets)->capture_default_str();
  ex_cmd->add_option("--neighbors", xcfg.neighbors)->capture_default_str();
  ex_cmd->add_option("--samples", xcfg.samples, "Draws per row when marginal")->capture_default_str();
  ex_cmd->add_flag("--marginal", ex_marginal, "Marginal instead of nearest-neighbor conditional sampling");
  ex_cmd->add_option("--seed", acfg.seed)->capture_default_str();

  // ---- serve
  auto* serve_cmd = app.add_subcommand("serve", "Alert service with HTTP/JSON API");
  std::string sv_model, sv_config, sv_run, sv_state, sv_ui, sv_host = "127.0.0.1", sv_score;
  int sv_port = 8080;
  serve_cmd->add_option("--model", sv_model)->required();
  serve_cmd->add_option("--config", sv_config, "Service config JSON");
  serve_cmd->add_option("--port", sv_port)->capture_default_str();
  serve_cmd->add_option("--host", sv_host)->capture_default_str();
  serve_cmd->add_option("--run", sv_run, "Run directory: encoder, training data, evaluation set");
  serve_cmd->add_option("--state", sv_state, "Persistent state directory (default: in memory)");
  serve_cmd->add_option("--ui", sv_ui, "Static triage UI directory");
  serve_cmd->add_option("--score", sv_score, "Score a run subset (val|test) at startup");

  // ---- loopin-sim
  auto* loop_cmd = app.add_subcommand("loopin-sim", "Offline analyst-feedback simulation");
  service::ServiceConfig loop_cfg;
  std::string lo_run, lo_out, lo_state, lo_config;
  loop_cmd->add_option("--threshold", loop_cfg.alert_threshold)->capture_default_str();
  loop_cmd->add_option("--run", lo_run)->required();
  loop_cmd->add_option("--config", lo_config, "Service config JSON (threshold flag wins)");
  loop_cmd->add_option("--state", lo_state);
  loop_cmd->add_option("--out", lo_out, "Report JSON");

  // ---- pipeline
  auto* pipe_cmd = app.add_subcommand("pipeline", "Features, encoder, images and detector in one go");
  std::string pi_corpus, pi_out, pi_rep = "daily";
  encoder::SaeHyper pi_hyper;
  detector::DetectorConfig pi_cfg;
  std::uint64_t pi_seed = 7;
  bool pi_no_aug = false;
  pipe_cmd->add_option("--corpus", pi_corpus, "Corpus directory (synth layout)")->required();
  pipe_cmd->add_option("--out", pi_out, "Run directory")->required();
  pipe_cmd->add_option("--rep", pi_rep)->capture_default_str();
  pipe_cmd->add_option("--seed", pi_seed)->capture_default_str();
  pipe_cmd->add_option("--sae-epochs", pi_hyper.epochs)->capture_default_str();
  pipe_cmd->add_option("--epochs", pi_cfg.epochs)->capture_default_str();
  pipe_cmd->add_flag("--no-augment", pi_no_aug);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth_cmd) {
      if (!synth_start.empty()) scfg.start = Date::parse_iso(synth_start);
      const auto corpus = synth::generate(scfg);
      synth::write_corpus(corpus, scfg, synth_out);
      std::size_t malicious = 0;
      for (const auto& [k, l] : corpus.labels) malicious += features::is_malicious(l);
      std::printf("%zu events, %zu users, %zu user-days (%zu malicious), %zu insiders -> %s\n", corpus.events.size(),
                  corpus.ldap.size(), corpus.labels.size(), malicious, corpus.insiders.size(), synth_out.c_str());
    } else if (*ingest_cmd) {
      ingest::EventStore::LoadReport report;
      const auto store = ingest::EventStore::load_dir(ing_logs, {ing_strict}, &report);
      fs::path ldap_path = ing_ldap;
      std::vector<ingest::LdapRecord> ldap;
      if (!ing_psych.empty()) {
        ldap = fs::is_directory(ldap_path) ? ingest::load_ldap_dir(ldap_path, fs::path(ing_psych))
                                           : [&] {
                                               std::ifstream s(ldap_path, std::ios::binary), p(ing_psych, std::ios::binary);
                                               return ingest::load_ldap(s, &p);
                                             }();
      } else {
        ldap = load_ldap_any(ldap_path);
      }
      {
        std::ifstream d(ing_dict, std::ios::binary);
        if (!d) fail(ErrorCode::Io, "cannot open " + ing_dict);
        const auto dict = ingest::load_word_frequencies(d);
        if (dict.size() == 0) fail(ErrorCode::EmptyDictionary, ing_dict);
      }
      store.save_dir(ing_out);
      save_ldap(ing_out, ldap);
      fs::copy_file(ing_dict, fs::path(ing_out) / "word_freq.csv", fs::copy_options::overwrite_existing);
      if (!ing_labels.empty())
        fs::copy_file(ing_labels, fs::path(ing_out) / "labels.csv", fs::copy_options::overwrite_existing);
      json rep{{"events", store.events().size()}, {"users", ldap.size()}, {"rows", report.rows}};
      json errs = json::array();
      for (const auto& [file, e] : report.errors) errs.push_back({{"file", file}, {"row", e.row}, {"reason", e.reason}});
      rep["malformed"] = errs;
      write_text(fs::path(ing_out) / "ingest_report.json", rep.dump(2) + "\n");
      std::printf("%zu events, %zu malformed rows skipped -> %s\n", store.events().size(), report.errors.size(),
                  ing_out.c_str());
    } else if (*feat_cmd) {
      pipeline::CorpusInputs in;
      const fs::path store_dir = fe_store;
      in.store = ingest::EventStore::load_dir(store_dir);
      in.ldap = load_ldap_any(store_dir);
      const fs::path labels = fe_labels.empty() ? store_dir / "labels.csv" : fs::path(fe_labels);
      if (fs::exists(labels)) {
        std::ifstream l(labels, std::ios::binary);
        in.labels = features::read_labels_csv(l);
      }
      if (!fe_detectors.empty()) {
        in.detectors = conical::TopicDetectors::load_dir(fe_detectors);
      } else {
        const fs::path corpora = fe_corpora.empty() ? store_dir / "corpora" : fs::path(fe_corpora);
        if (fs::exists(corpora) && fs::exists(store_dir / "word_freq.csv")) {
          std::ifstream d(store_dir / "word_freq.csv", std::ios::binary);
          in.detectors = conical::TopicDetectors::fit_dir(corpora, ingest::load_word_frequencies(d));
        } else {
          in.detectors = pipeline::fit_seed_detectors();
        }
      }
      const auto days = pipeline::extract(in, fe_domain);
      std::ostringstream out;
      features::write_features_csv(out, days, !in.labels.empty());
      write_text(fe_out, out.str());
      std::printf("%zu user-days -> %s\n", days.size(), fe_out.c_str());
    } else if (*cc_fit) {
      std::ifstream d(cc_dict, std::ios::binary);
      if (!d) fail(ErrorCode::Io, "cannot open " + cc_dict);
      const auto dict = ingest::load_word_frequencies(d);
      const auto docs = conical::read_corpus_dir(cc_corpus);
      const auto name = cc_name.empty() ? fs::path(cc_corpus).filename().string() : cc_name;
      const auto model = conical::ConicalModel::fit(name, docs, dict, cc_tol, cc_eps);
      model.save(cc_out);
      std::printf("%s: %zu documents, vocabulary %zu -> %s\n", name.c_str(), docs.size(),
                  model.vectorizer().dimension(), cc_out.c_str());
    } else if (*cc_classify) {
      auto model = conical::ConicalModel::load(cc_model);
      if (cc_tol_override) model.set_residual_tol(*cc_tol_override);
      const auto text = read_text(cc_text);
      const auto x = model.vectorizer().vectorize(text);
      const auto r = model.in_cone(x);
      std::printf("%s residual=%.6g\n", r.member ? "positive" : "negative", r.residual);
      return r.member ? 0 : 1;
    } else if (*sae_train) {
      const auto days = load_features(sae_features);
      encoder::SaeTrainReport rep;
      const auto model = encoder::train_sae(encoder::feature_matrix(days), hyper, &rep);
      model.save(sae_out);
      std::printf("%zu rows, %zu epochs, loss %.6f -> %.6f\n", days.size(), rep.epoch_loss.size(), rep.initial_loss,
                  rep.epoch_loss.empty() ? rep.initial_loss : rep.epoch_loss.back());
    } else if (*sae_encode) {
      const auto model = encoder::SaeModel::load(sae_model);
      const auto days = load_features(sae_features);
      const auto px = encoder::encode_grey_batch(model, encoder::feature_matrix(days));
      const fs::path dir = sae_enc_out;
      fs::create_directories(dir);
      std::ostringstream index;
      index << "file,user,date,label\n";
      char name[32];
      for (std::size_t i = 0; i < px.size(); ++i) {
        std::snprintf(name, sizeof name, "%06zu.png", i);
        const auto png = eval::write_png(px[i]);
        write_text(dir / name, std::string(png.begin(), png.end()));
        index << name << ',' << days[i].day.user << ',' << days[i].day.date.iso() << ','
              << features::label_name(days[i].label) << '\n';
      }
      write_text(dir / "index.csv", index.str());
      std::printf("%zu greyscale encodings -> %s\n", px.size(), sae_enc_out.c_str());
    } else if (*compose_cmd) {
      const auto rep = encoder::representation_from_name(co_rep);
      const auto days = load_features(co_features);
      const auto sae = encoder::SaeModel::load(co_sae);
      std::vector<ingest::LdapRecord> ldap;
      if (!co_ldap.empty()) ldap = load_ldap_any(co_ldap);
      if (rep == encoder::Representation::Role && ldap.empty())
        fail(ErrorCode::InvalidArgument, "the role representation needs --ldap");
      const auto data = encoder::compose_dataset(sae, rep, days, ldap);
      eval::save_image_dataset(co_out, data);
      std::printf("%zu %s encodings -> %s\n", data.size(), co_rep.c_str(), co_out.c_str());
    } else if (*aug_cmd) {
      const auto data = eval::load_image_dataset(au_images);
      std::vector<detector::Sample> s;
      s.reserve(data.size());
      for (const auto& d : data) s.push_back({d.image, {}, features::is_malicious(d.label) ? 1 : 0, d.label});
      std::mt19937_64 rng(au_seed);
      const auto out = detector::augment_training_set(s, {au_swap, au_replace}, rng);
      std::vector<encoder::EncodedDay> aug = data;
      for (std::size_t i = data.size(); i < out.size(); ++i) aug.push_back({out[i].image, out[i].scenario, true});
      eval::save_image_dataset(au_out, aug);
      std::printf("%zu encodings + %zu augmented -> %s\n", data.size(), aug.size() - data.size(), au_out.c_str());
    } else if (*cc_corr) {
      const auto rep = encoder::representation_from_name(ev_rep);
      auto data = eval::load_image_dataset(ev_images);
      std::erase_if(data, [&](const encoder::EncodedDay& d) { return d.image.representation != rep; });
      const auto study = eval::correlation_study(data);
      if (!ev_out.empty()) {
        std::ostringstream csv;
        csv << "user,date,colorfulness,any_channel_malicious,label\n";
        for (std::size_t i = 0; i < data.size(); ++i)
          csv << data[i].image.user << ',' << data[i].image.date.iso() << ','
              << features::format_double(study.colorfulness[i]) << ',' << study.labels[i] << ','
              << features::label_name(data[i].label) << '\n';
        write_text(ev_out, csv.str());
      }
      std::printf("r = %.4f over %zu %s encodings\n", study.r, data.size(), ev_rep.c_str());
    } else if (*det_train) {
      const auto data = eval::load_image_dataset(de_images);
      const auto ldap = load_ldap_any(de_ldap);
      const auto roles = detector::role_vocabulary(ldap);
      split_spec.seed = dcfg.seed;
      auto splits = synth::stratified_split(dataset_labels(data), split_spec);
      if (!de_holdout.empty()) splits = synth::unseen_attack_protocol(splits, dataset_labels(data), parse_holdout(de_holdout));
      if (de_no_swap) dcfg.augment.swap = false;
      detector::TrainReport rep;
      const auto model = detector::train_classifier(dataset_samples(data, splits.train, ldap, roles),
                                                    dataset_samples(data, splits.val, ldap, roles), roles, dcfg, &rep);
      model.save(de_out);
      if (!de_split.empty()) write_text(de_split, splits_to_json(splits));
      print_metrics("test", detector::evaluate(model, dataset_samples(data, splits.test, ldap, roles)));
      std::printf("best epoch %d of %zu, %zu training samples -> %s\n", rep.best_epoch, rep.train_loss.size(),
                  rep.train_size, de_out.c_str());
    } else if (*det_eval) {
      const auto model = detector::DetectionModel::load(de_model);
      const auto data = eval::load_image_dataset(de_images);
      const auto ldap = load_ldap_any(de_ldap);
      const auto splits = de_split.empty() ? synth::stratified_split(dataset_labels(data), split_spec)
                                           : splits_from_json(read_text(de_split));
      const auto idx = subset_of(splits, de_subset, data.size());
      const auto m = detector::evaluate(model, dataset_samples(data, idx, ldap, model.roles));
      print_metrics(de_subset.c_str(), m);
      if (!de_out.empty()) write_text(de_out, metrics_json(m).dump(2) + "\n");
    } else if (*det_predict) {
      const auto model = detector::DetectionModel::load(de_model);
      const auto data = eval::load_image_dataset(de_images);
      const auto ldap = load_ldap_any(de_ldap);
      const auto s = dataset_samples(data, all_indices(data.size()), ldap, model.roles);
      const auto p = detector::predict_batch(model, s);
      std::ostringstream csv;
      csv << "user,date,probability,label\n";
      for (std::size_t i = 0; i < s.size(); ++i)
        csv << s[i].image.user << ',' << s[i].image.date.iso() << ',' << features::format_double(p[i]) << ','
            << features::label_name(s[i].scenario) << '\n';
      write_text(de_out, csv.str());
      std::printf("%zu predictions -> %s\n", s.size(), de_out.c_str());
    } else if (*det_actmax) {
      const auto model = detector::DetectionModel::load(de_model);
      const auto target = to_lower(de_target) == "benign" ? detector::Target::Benign : detector::Target::Malicious;
      if (target == detector::Target::Malicious && to_lower(de_target) != "malicious")
        fail(ErrorCode::InvalidArgument, "target must be malicious or benign");
      const auto r = detector::activation_maximization(model, target, amcfg);
      const auto img = r.rounded();
      const auto png = eval::write_png(img);
      write_text(de_out, std::string(png.begin(), png.end()));
      std::printf("p(%s) = %.4f, colorfulness %.2f -> %s\n", de_target.c_str(), r.probability, eval::colorfulness(img),
                  de_out.c_str());
    } else if (*ex_cmd) {
      const fs::path run_dir = ex_run;
      const auto model = detector::DetectionModel::load(ex_model.empty() ? run_dir / "detector.json" : fs::path(ex_model));
      const auto run = load_run(run_dir, &model);
      const auto players = explain::parse_feature_list(ex_features);
      std::vector<std::string> names;
      for (int p : players) names.emplace_back(features::kFeatureNames[static_cast<std::size_t>(p)]);
      const auto rows = explain_rows(run, run.splits.test, ex_rows, acfg.seed);
      auto eval_samples = run.samples(rows);
      std::vector<int> y;
      for (const auto& s : eval_samples) y.push_back(s.label);
      xcfg.conditional = !ex_marginal;
      xcfg.seed = acfg.seed;
      const explain::RemovalExplainer explainer(explain::detector_model(run.sae, model, std::move(eval_samples)),
                                                run.feature_rows(rows), y, run.feature_rows(run.splits.train), xcfg);
      const auto report = explainer.attribute(players, names, acfg);
      write_text(ex_out, report.to_json());
      std::printf("%-24s %10s %10s %10s %10s\n", "feature", "shapley", "banzhaf", "remove", "include");
      for (const auto& p : report.players)
        std::printf("%-24s %10.5f %10.5f %10.5f %10.5f\n", p.name.c_str(), p.shapley, p.banzhaf, p.remove_individual,
                    p.include_individual);
      std::printf("value(all) %.5f, value(none) %.5f, shapley sum %.5f +- %.5f -> %s\n", report.value_full,
                  report.value_empty, report.shapley_sum(), report.shapley_sum_se(), ex_out.c_str());
    } else if (*serve_cmd) {
      auto cfg = sv_config.empty() ? service::ServiceConfig{} : service::ServiceConfig::from_json(read_text(sv_config));
      cfg.validate();
      auto model = detector::DetectionModel::load(sv_model);
      service::AlertService svc(cfg, sv_state.empty() ? fs::path{} : fs::path(sv_state));
      service::HttpApi::Options opts;
      if (!sv_ui.empty()) opts.ui_dir = fs::path(sv_ui);
      std::optional<RunData> run;
      if (!sv_run.empty()) {
        run = load_run(sv_run, &model);
        svc.set_training_data(run->samples(run->splits.train), run->samples(run->splits.val));
        svc.set_encoder(run->sae, run->feature_rows(run->splits.train));
        svc.set_evaluation_set(run->samples(run->splits.test));
        opts.ldap = run->ldap;
      }
      if (svc.model_version() == 0) svc.install_model(model);
      if (!sv_score.empty()) {
        if (!run) fail(ErrorCode::InvalidArgument, "--score needs --run");
        const auto idx = subset_of(run->splits, sv_score, run->dataset.size());
        const auto s = run->samples(idx);
        std::size_t alerts = 0;
        for (std::size_t i = 0; i < s.size(); ++i) {
          service::ScoreRequest req{s[i].image.user, s[i].image.date, s[i].image, {s[i].nd},
                                    run->days[run->plans[idx[i]].current].day.f};
          alerts += svc.score_and_alert(req).alert.has_value();
        }
        std::printf("scored %zu %s days, %zu alerts open\n", s.size(), sv_score.c_str(), alerts);
      }
      service::HttpApi api(svc, std::move(opts));
      g_api = &api;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::printf("serving model v%d on http://%s:%d\n", svc.model_version(), sv_host.c_str(), sv_port);
      std::fflush(stdout);
      const bool ok = api.listen(sv_host, sv_port);
      g_api = nullptr;
      if (!ok) fail(ErrorCode::Io, "cannot listen on " + sv_host + ":" + std::to_string(sv_port));
    } else if (*loop_cmd) {
      if (!lo_config.empty()) {
        const double thr = loop_cfg.alert_threshold;
        loop_cfg = service::ServiceConfig::from_json(read_text(lo_config));
        if (loop_cmd->count("--threshold")) loop_cfg.alert_threshold = thr;
      }
      loop_cfg.validate();
      const fs::path run_dir = lo_run;
      const auto model = detector::DetectionModel::load(run_dir / "detector.json");
      const auto run = load_run(run_dir, &model);
      const auto rep = service::loop_in_simulation(model, run.samples(run.splits.train), run.samples(run.splits.val),
                                                   run.samples(run.splits.test), loop_cfg,
                                                   lo_state.empty() ? fs::path{} : fs::path(lo_state));
      std::printf("scored %zu, alerts %zu (%zu low confidence), labeled %zu malicious / %zu benign\n", rep.scored,
                  rep.alerts, rep.low_confidence, rep.labeled_malicious, rep.labeled_benign);
      print_metrics("before", rep.before);
      print_metrics("after ", rep.after);
      if (!lo_out.empty()) write_text(lo_out, rep.to_json());
    } else if (*pipe_cmd) {
      const fs::path out = pi_out;
      const auto rep = encoder::representation_from_name(pi_rep);
      const auto in = pipeline::load_corpus(pi_corpus);
      const auto days = pipeline::extract(in);
      {
        std::ostringstream f;
        features::write_features_csv(f, days, true);
        write_text(out / "features.csv", f.str());
      }
      save_ldap(out, in.ldap);
      std::printf("features: %zu user-days\n", days.size());
      std::fflush(stdout);

      synth::SplitSpec spec;
      spec.seed = pi_seed;
      pi_hyper.seed = pi_seed;
      const auto prep = pipeline::prepare(days, in.ldap, rep, spec, pi_hyper);
      prep.sae.save(out / "sae.json");
      eval::save_image_dataset(out / "images", prep.dataset);
      write_text(out / "split.json", splits_to_json(prep.splits));
      std::printf("encoder: %zu epochs; %zu images (train %zu, val %zu, test %zu)\n", prep.sae_report.epoch_loss.size(),
                  prep.dataset.size(), prep.splits.train.size(), prep.splits.val.size(), prep.splits.test.size());
      std::fflush(stdout);

      const auto roles = detector::role_vocabulary(in.ldap);
      pi_cfg.seed = pi_seed;
      if (pi_no_aug) pi_cfg.augment = {false, 0};
      detector::TrainReport trep;
      const auto model = detector::train_classifier(pipeline::samples(prep.dataset, prep.splits.train, in.ldap, roles),
                                                    pipeline::samples(prep.dataset, prep.splits.val, in.ldap, roles),
                                                    roles, pi_cfg, &trep);
      model.save(out / "detector.json");
      const auto m = detector::evaluate(model, pipeline::samples(prep.dataset, prep.splits.test, in.ldap, roles));
      const auto corr = eval::correlation_study(prep.dataset);
      json report{{"test", metrics_json(m)},
                  {"training", train_report_json(trep)},
                  {"color_correlation", corr.r},
                  {"representation", encoder::representation_name(rep)},
                  {"seed", pi_seed}};
      write_text(out / "metrics.json", report.dump(2) + "\n");
      print_metrics("test", m);
      std::printf("colorfulness correlation r = %.4f -> %s\n", corr.r, pi_out.c_str());
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error [%s]: %s\n", std::string(to_string(e.code())).c_str(), e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
