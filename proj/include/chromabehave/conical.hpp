#pragma once

#include <Eigen/Dense>
#include <array>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "chromabehave/ingest.hpp"

namespace chromabehave::conical {

/// Lowercase, split on non-alphanumerics, drop tokens shorter than 2 chars.
std::vector<std::string> tokenize(std::string_view text);

/// Standard normal quantile (Wichura AS241, ~1e-16 relative accuracy).
double normal_quantile(double p);

struct NnlsResult {
  Eigen::VectorXd lambda;
  double residual = 0.0;  // ||A lambda - b||_2
  int iterations = 0;
};

/// Lawson-Hanson active-set solution of min ||A x - b|| subject to x >= 0.
NnlsResult nnls(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, int max_iterations = 0);

/// Normal-Exclusion weights over a positive corpus vocabulary.
///
/// For each vocabulary word w the weight is
///   ne(w) = |Q(tpr(w) + eps) - Q(dict(w) + eps)|
/// with Q the standard normal quantile, tpr(w) the fraction of positive
/// documents containing w and dict(w) the general-language frequency.
/// Quantile arguments are clamped to [eps, 1 - eps].
class NeTfVectorizer {
 public:
  static constexpr double kDefaultEpsilon = 0.0005;

  static NeTfVectorizer fit(const std::vector<std::string>& positive_corpus, const ingest::FrequencyDict& dict,
                            double epsilon = kDefaultEpsilon);
  static NeTfVectorizer from_parts(std::vector<std::string> vocabulary, std::vector<double> tpr,
                                   std::vector<double> dict_freq, double epsilon);

  /// Component w is raw term count of w in `doc` times ne(w); out-of-vocabulary tokens are ignored.
  Eigen::VectorXd vectorize(std::string_view doc) const;

  std::size_t dimension() const { return vocabulary_.size(); }
  const std::vector<std::string>& vocabulary() const { return vocabulary_; }
  const std::vector<double>& tpr() const { return tpr_; }
  const std::vector<double>& dict_freq() const { return dict_freq_; }
  const std::vector<double>& ne() const { return ne_; }
  double epsilon() const { return epsilon_; }
  int index_of(std::string_view word) const;

  static double ne_weight(double tpr, double dict_freq, double epsilon);

 private:
  std::vector<std::string> vocabulary_;
  std::unordered_map<std::string, int> index_;
  std::vector<double> tpr_;
  std::vector<double> dict_freq_;
  std::vector<double> ne_;
  double epsilon_ = kDefaultEpsilon;
};

struct ConeResult {
  bool member = false;
  double residual = 0.0;
  Eigen::VectorXd lambda;
};

/// One-class topic detector: a document is positive when its NE-TF vector
/// lies in the conical span of the positive corpus vectors.
class ConicalModel {
 public:
  static constexpr double kDefaultResidualTol = 1e-6;

  ConicalModel() = default;
  ConicalModel(std::string name, NeTfVectorizer vectorizer, Eigen::MatrixXd basis,
               double residual_tol = kDefaultResidualTol);

  static ConicalModel fit(std::string name, const std::vector<std::string>& positive_corpus,
                          const ingest::FrequencyDict& dict, double residual_tol = kDefaultResidualTol,
                          double epsilon = NeTfVectorizer::kDefaultEpsilon);

  /// NNLS projection onto the cone. Zero vectors are never members.
  ConeResult in_cone(const Eigen::VectorXd& x) const;
  bool classify_text(std::string_view doc) const;

  const std::string& name() const { return name_; }
  const NeTfVectorizer& vectorizer() const { return vectorizer_; }
  const Eigen::MatrixXd& basis() const { return basis_; }
  double residual_tol() const { return residual_tol_; }
  void set_residual_tol(double tol) { residual_tol_ = tol; }

  std::string to_json() const;
  static ConicalModel from_json(std::string_view text);
  void save(const std::filesystem::path& path) const;
  static ConicalModel load(const std::filesystem::path& path);

 private:
  std::string name_;
  NeTfVectorizer vectorizer_;
  Eigen::MatrixXd basis_;
  double residual_tol_ = kDefaultResidualTol;
};

enum class Topic { Disgruntled = 0, JobSite = 1, Wikileaks = 2, Keylogger = 3 };
inline constexpr std::array<Topic, 4> kAllTopics = {Topic::Disgruntled, Topic::JobSite, Topic::Wikileaks,
                                                     Topic::Keylogger};
std::string_view topic_name(Topic t);

/// The four insider-threat text detectors used by the feature extractor.
struct TopicDetectors {
  std::array<ConicalModel, 4> models;
  const ConicalModel& operator[](Topic t) const { return models[static_cast<std::size_t>(t)]; }

  /// Fits from `<dir>/<topic>/*.txt` (one document per file).
  static TopicDetectors fit_dir(const std::filesystem::path& dir, const ingest::FrequencyDict& dict,
                                double residual_tol = ConicalModel::kDefaultResidualTol);
  void save_dir(const std::filesystem::path& dir) const;
  static TopicDetectors load_dir(const std::filesystem::path& dir);
};

std::vector<std::string> read_corpus_dir(const std::filesystem::path& dir);

}  // namespace chromabehave::conical
