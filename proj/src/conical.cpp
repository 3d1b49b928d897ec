#include "chromabehave/conical.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <set>
#include <sstream>

namespace chromabehave::conical {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (cur.size() >= 2) out.push_back(cur);
    cur.clear();
  };
  for (char c : text) {
    const auto u = static_cast<unsigned char>(c);
    if (std::isalnum(u)) {
      cur.push_back(static_cast<char>(std::tolower(u)));
    } else {
      flush();
    }
  }
  flush();
  return out;
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return -std::numeric_limits<double>::infinity();
    if (p == 1.0) return std::numeric_limits<double>::infinity();
    return std::numeric_limits<double>::quiet_NaN();
  }
  const double q = p - 0.5;
  if (std::fabs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q *
           (((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) * r + 6.7265770927008700853e+4) * r +
                4.5921953931549871457e+4) * r + 1.3731693765509461125e+4) * r + 1.9715909503065514427e+3) * r +
             1.3314166789178437745e+2) * r + 3.3871328727963666080e0) /
           (((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) * r + 3.9307895800092710610e+4) * r +
                2.1213794301586595867e+4) * r + 5.3941960214247511077e+3) * r + 6.8718700749205790830e+2) * r +
             4.2313330701600911252e+1) * r + 1.0);
  }
  double r = q < 0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double val;
  if (r <= 5.0) {
    r -= 1.6;
    val = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r + 2.41780725177450611770e-1) * r +
               1.27045825245236838258e0) * r + 3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
            4.63033784615654529590e0) * r + 1.42343711074968357734e0) /
          (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r + 1.51986665636164571966e-2) * r +
               1.48103976427480074590e-1) * r + 6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
            2.05319162663775882187e0) * r + 1.0);
  } else {
    r -= 5.0;
    val = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r + 1.24266094738807843860e-3) * r +
               2.65321895265761230930e-2) * r + 2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
            5.46378491116411436990e0) * r + 6.65790464350110377720e0) /
          (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r + 1.84631831751005468180e-5) * r +
               7.86869131145613259100e-4) * r + 1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
            5.99832206555887937690e-1) * r + 1.0);
  }
  return q < 0 ? -val : val;
}

// ---------------------------------------------------------------------------
// NNLS

NnlsResult nnls(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, int max_iterations) {
  const Eigen::Index n = A.cols();
  if (A.rows() != b.size()) fail(ErrorCode::DimensionMismatch, "nnls: rows(A) != size(b)");
  if (max_iterations <= 0) max_iterations = static_cast<int>(3 * n + 30);

  NnlsResult res;
  res.lambda = Eigen::VectorXd::Zero(n);
  if (n == 0) {
    res.residual = b.norm();
    return res;
  }
  Eigen::VectorXd& x = res.lambda;
  std::vector<char> passive(static_cast<std::size_t>(n), 0);
  std::vector<char> blocked(static_cast<std::size_t>(n), 0);

  const double anorm = A.cwiseAbs().colwise().sum().maxCoeff();
  const double tol = 10.0 * std::numeric_limits<double>::epsilon() * anorm *
                     static_cast<double>(std::max(A.rows(), n));

  // Least squares restricted to the passive columns.
  auto solve_passive = [&](Eigen::VectorXd& z) {
    std::vector<Eigen::Index> cols;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (passive[static_cast<std::size_t>(j)]) cols.push_back(j);
    }
    Eigen::MatrixXd Ap(A.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t k = 0; k < cols.size(); ++k) Ap.col(static_cast<Eigen::Index>(k)) = A.col(cols[k]);
    const Eigen::VectorXd zp = Ap.colPivHouseholderQr().solve(b);
    z.setZero(n);
    for (std::size_t k = 0; k < cols.size(); ++k) z(cols[k]) = zp(static_cast<Eigen::Index>(k));
  };

  Eigen::VectorXd w = A.transpose() * b;
  Eigen::VectorXd z(n);
  int iter = 0;
  while (iter < max_iterations) {
    Eigen::Index best = -1;
    double best_w = tol;
    for (Eigen::Index j = 0; j < n; ++j) {
      const auto uj = static_cast<std::size_t>(j);
      if (!passive[uj] && !blocked[uj] && w(j) > best_w) {
        best_w = w(j);
        best = j;
      }
    }
    if (best < 0) break;
    passive[static_cast<std::size_t>(best)] = 1;
    bool progressed = false;

    while (iter++ < max_iterations) {
      solve_passive(z);
      bool feasible = true;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (passive[static_cast<std::size_t>(j)] && z(j) <= 0.0) feasible = false;
      }
      if (feasible) {
        x = z;
        progressed = true;
        break;
      }
      // The entering column could not take a positive weight: numerically
      // degenerate, exclude it until x changes again.
      if (!progressed && z(best) <= 0.0) {
        bool others_ok = true;
        for (Eigen::Index j = 0; j < n; ++j) {
          if (j != best && passive[static_cast<std::size_t>(j)] && z(j) <= 0.0) others_ok = false;
        }
        if (others_ok) {
          passive[static_cast<std::size_t>(best)] = 0;
          blocked[static_cast<std::size_t>(best)] = 1;
          break;
        }
      }
      double alpha = 1.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (passive[static_cast<std::size_t>(j)] && z(j) <= 0.0) {
          const double denom = x(j) - z(j);
          if (denom > 0) alpha = std::min(alpha, x(j) / denom);
        }
      }
      x += alpha * (z - x);
      progressed = true;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (passive[static_cast<std::size_t>(j)] && x(j) <= tol) {
          passive[static_cast<std::size_t>(j)] = 0;
          x(j) = 0.0;
        }
      }
    }
    if (progressed) std::fill(blocked.begin(), blocked.end(), 0);
    w = A.transpose() * (b - A * x);
  }
  for (Eigen::Index j = 0; j < n; ++j) x(j) = std::max(0.0, x(j));
  res.residual = (A * x - b).norm();
  res.iterations = iter;
  return res;
}

// ---------------------------------------------------------------------------
// Vectorizer

double NeTfVectorizer::ne_weight(double tpr, double dict_freq, double epsilon) {
  auto arg = [epsilon](double v) { return std::clamp(v + epsilon, epsilon, 1.0 - epsilon); };
  return std::fabs(normal_quantile(arg(tpr)) - normal_quantile(arg(dict_freq)));
}

NeTfVectorizer NeTfVectorizer::fit(const std::vector<std::string>& positive_corpus, const ingest::FrequencyDict& dict,
                                   double epsilon) {
  if (positive_corpus.empty()) fail(ErrorCode::EmptyCorpus, "positive corpus has no documents");
  std::map<std::string, int> doc_count;
  for (const auto& doc : positive_corpus) {
    const auto toks = tokenize(doc);
    const std::set<std::string> uniq(toks.begin(), toks.end());
    for (const auto& t : uniq) ++doc_count[t];
  }
  if (doc_count.empty()) fail(ErrorCode::EmptyCorpus, "positive corpus has no tokens");
  std::vector<std::string> vocab;
  std::vector<double> tpr, dfreq;
  const double pos = static_cast<double>(positive_corpus.size());
  for (const auto& [w, c] : doc_count) {
    vocab.push_back(w);
    tpr.push_back(c / pos);
    dfreq.push_back(dict.lookup(w));
  }
  return from_parts(std::move(vocab), std::move(tpr), std::move(dfreq), epsilon);
}

NeTfVectorizer NeTfVectorizer::from_parts(std::vector<std::string> vocabulary, std::vector<double> tpr,
                                          std::vector<double> dict_freq, double epsilon) {
  if (vocabulary.size() != tpr.size() || vocabulary.size() != dict_freq.size()) {
    fail(ErrorCode::DimensionMismatch, "vectorizer parts disagree in length");
  }
  NeTfVectorizer v;
  v.epsilon_ = epsilon;
  v.vocabulary_ = std::move(vocabulary);
  v.tpr_ = std::move(tpr);
  v.dict_freq_ = std::move(dict_freq);
  v.ne_.resize(v.vocabulary_.size());
  for (std::size_t i = 0; i < v.vocabulary_.size(); ++i) {
    if (!v.index_.emplace(v.vocabulary_[i], static_cast<int>(i)).second) {
      fail(ErrorCode::InvalidArgument, "duplicate vocabulary word '" + v.vocabulary_[i] + "'");
    }
    v.ne_[i] = ne_weight(v.tpr_[i], v.dict_freq_[i], epsilon);
  }
  return v;
}

int NeTfVectorizer::index_of(std::string_view word) const {
  auto it = index_.find(std::string(word));
  return it == index_.end() ? -1 : it->second;
}

Eigen::VectorXd NeTfVectorizer::vectorize(std::string_view doc) const {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(vocabulary_.size()));
  for (const auto& tok : tokenize(doc)) {
    const int i = index_of(tok);
    if (i >= 0) v(i) += 1.0;
  }
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (v(i) != 0.0) v(i) *= ne_[static_cast<std::size_t>(i)];
  }
  return v;
}

// ---------------------------------------------------------------------------
// Cone model

ConicalModel::ConicalModel(std::string name, NeTfVectorizer vectorizer, Eigen::MatrixXd basis, double residual_tol)
    : name_(std::move(name)), vectorizer_(std::move(vectorizer)), basis_(std::move(basis)), residual_tol_(residual_tol) {
  if (basis_.rows() != static_cast<Eigen::Index>(vectorizer_.dimension())) {
    fail(ErrorCode::DimensionMismatch, "basis rows != vocabulary size");
  }
}

ConicalModel ConicalModel::fit(std::string name, const std::vector<std::string>& positive_corpus,
                               const ingest::FrequencyDict& dict, double residual_tol, double epsilon) {
  auto vec = NeTfVectorizer::fit(positive_corpus, dict, epsilon);
  Eigen::MatrixXd basis(static_cast<Eigen::Index>(vec.dimension()), static_cast<Eigen::Index>(positive_corpus.size()));
  for (std::size_t k = 0; k < positive_corpus.size(); ++k) {
    basis.col(static_cast<Eigen::Index>(k)) = vec.vectorize(positive_corpus[k]);
  }
  return ConicalModel(std::move(name), std::move(vec), std::move(basis), residual_tol);
}

ConeResult ConicalModel::in_cone(const Eigen::VectorXd& x) const {
  if (x.size() != basis_.rows()) {
    fail(ErrorCode::DimensionMismatch,
         "vector has " + std::to_string(x.size()) + " components, cone has " + std::to_string(basis_.rows()));
  }
  ConeResult out;
  const double xnorm = x.norm();
  if (xnorm == 0.0) {
    out.lambda = Eigen::VectorXd::Zero(basis_.cols());
    return out;
  }
  auto sol = nnls(basis_, x);
  out.residual = sol.residual;
  out.lambda = std::move(sol.lambda);
  out.member = sol.residual / std::max(xnorm, std::numeric_limits<double>::min()) <= residual_tol_;
  return out;
}

bool ConicalModel::classify_text(std::string_view doc) const { return in_cone(vectorizer_.vectorize(doc)).member; }

std::string ConicalModel::to_json() const {
  json j;
  j["format"] = "chromabehave.conical";
  j["version"] = 1;
  j["name"] = name_;
  j["epsilon"] = vectorizer_.epsilon();
  j["residual_tol"] = residual_tol_;
  j["vocabulary"] = vectorizer_.vocabulary();
  j["tpr"] = vectorizer_.tpr();
  j["dict_freq"] = vectorizer_.dict_freq();
  j["ne"] = vectorizer_.ne();
  json cols = json::array();
  for (Eigen::Index c = 0; c < basis_.cols(); ++c) {
    std::vector<double> col(basis_.col(c).data(), basis_.col(c).data() + basis_.rows());
    cols.push_back(col);
  }
  j["basis_columns"] = std::move(cols);
  return j.dump();
}

ConicalModel ConicalModel::from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::CorruptFile, std::string("conical model: ") + e.what());
  }
  if (j.value("format", "") != "chromabehave.conical" || j.value("version", 0) != 1) {
    fail(ErrorCode::CorruptFile, "not a version-1 conical model");
  }
  auto vec = NeTfVectorizer::from_parts(j.at("vocabulary").get<std::vector<std::string>>(),
                                        j.at("tpr").get<std::vector<double>>(),
                                        j.at("dict_freq").get<std::vector<double>>(), j.at("epsilon").get<double>());
  const auto& cols = j.at("basis_columns");
  Eigen::MatrixXd basis(static_cast<Eigen::Index>(vec.dimension()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) {
    const auto col = cols[c].get<std::vector<double>>();
    if (col.size() != vec.dimension()) fail(ErrorCode::CorruptFile, "basis column length mismatch");
    for (std::size_t r = 0; r < col.size(); ++r) basis(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = col[r];
  }
  return ConicalModel(j.at("name").get<std::string>(), std::move(vec), std::move(basis),
                      j.at("residual_tol").get<double>());
}

void ConicalModel::save(const fs::path& path) const {
  std::ofstream out(path, std::ios::binary);
  out << to_json() << '\n';
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
}

ConicalModel ConicalModel::load(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

std::string_view topic_name(Topic t) {
  switch (t) {
    case Topic::Disgruntled: return "disgruntled";
    case Topic::JobSite: return "job";
    case Topic::Wikileaks: return "wikileaks";
    case Topic::Keylogger: return "keylogger";
  }
  return "";
}

std::vector<std::string> read_corpus_dir(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".txt") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<std::string> docs;
  for (const auto& f : files) {
    std::ifstream in(f, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    docs.push_back(ss.str());
  }
  return docs;
}

TopicDetectors TopicDetectors::fit_dir(const fs::path& dir, const ingest::FrequencyDict& dict, double residual_tol) {
  TopicDetectors d;
  for (auto t : kAllTopics) {
    const auto docs = read_corpus_dir(dir / std::string(topic_name(t)));
    d.models[static_cast<std::size_t>(t)] = ConicalModel::fit(std::string(topic_name(t)), docs, dict, residual_tol);
  }
  return d;
}

void TopicDetectors::save_dir(const fs::path& dir) const {
  fs::create_directories(dir);
  for (auto t : kAllTopics) (*this)[t].save(dir / (std::string(topic_name(t)) + ".cc"));
}

TopicDetectors TopicDetectors::load_dir(const fs::path& dir) {
  TopicDetectors d;
  for (auto t : kAllTopics) {
    d.models[static_cast<std::size_t>(t)] = ConicalModel::load(dir / (std::string(topic_name(t)) + ".cc"));
  }
  return d;
}

}  // namespace chromabehave::conical
