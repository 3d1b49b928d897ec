#include <cmath>
#include <random>

#include "chromabehave/conical.hpp"
#include "chromabehave/synth.hpp"
#include "doctest.h"

using namespace chromabehave;
using namespace chromabehave::conical;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

ingest::FrequencyDict dict_of(std::unordered_map<std::string, double> f) { return ingest::FrequencyDict(std::move(f)); }

// Random nonnegative basis with k columns in n dimensions.
MatrixXd random_basis(std::mt19937_64& rng, int n, int k) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return MatrixXd::NullaryExpr(n, k, [&] { return u(rng) < 0.4 ? u(rng) : 0.0; });
}

// Placeholder vocabulary of the right width for cone tests on raw vectors.
NeTfVectorizer vocab(int n) {
  std::vector<std::string> words;
  for (int i = 0; i < n; ++i) words.push_back("w" + std::to_string(i));
  return NeTfVectorizer::from_parts(words, std::vector<double>(static_cast<std::size_t>(n), 0.5),
                                    std::vector<double>(static_cast<std::size_t>(n), 0.0), 0.0005);
}

}  // namespace

TEST_CASE("normal quantile agrees with tabulated values and inverts the CDF") {
  CHECK(normal_quantile(0.5) == 0.0);
  CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-14));
  CHECK(normal_quantile(0.8413447460685429) == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(normal_quantile(1e-6) == doctest::Approx(-4.753424308822899).epsilon(1e-12));
  for (double p = 1e-6; p < 1.0 - 1e-6; p += 0.0137) {
    CHECK(std::abs(normal_cdf(normal_quantile(p)) - p) < 1e-12);
    CHECK(normal_quantile(1 - p) == doctest::Approx(-normal_quantile(p)).epsilon(1e-9));
  }
}

TEST_CASE("tokenizer lowercases, splits on punctuation and drops one-letter tokens") {
  const auto t = tokenize("Hello, WORLD! a b2 x-ray");
  CHECK(t == std::vector<std::string>{"hello", "world", "b2", "ray"});
}

TEST_CASE("tpr counts documents containing the word") {
  const std::vector<std::string> docs{"apple pie", "apple tart", "plum", "fig"};
  const auto v = NeTfVectorizer::fit(docs, dict_of({}));
  CHECK(v.tpr()[static_cast<std::size_t>(v.index_of("apple"))] == 0.5);
  CHECK(v.tpr()[static_cast<std::size_t>(v.index_of("plum"))] == 0.25);
  CHECK(v.dimension() == 5);
}

TEST_CASE("NE weight is zero when tpr equals the dictionary frequency and 1 at the quantile table point") {
  CHECK(NeTfVectorizer::ne_weight(0.3, 0.3, 0.0005) == 0.0);
  // tpr + eps = 0.8413, dict + eps = 0.5
  const double ne = NeTfVectorizer::ne_weight(0.8408, 0.4995, 0.0005);
  CHECK(ne == doctest::Approx(std::abs(normal_quantile(0.8413))).epsilon(1e-12));
  CHECK(ne == doctest::Approx(1.0).epsilon(1e-3));
  // monotone in the quantile gap
  double prev = -1;
  for (double tpr = 0.5; tpr < 0.99; tpr += 0.05) {
    const double w = NeTfVectorizer::ne_weight(tpr, 0.1, 0.0005);
    CHECK(w > prev);
    prev = w;
  }
  // boundary: tpr = 1 stays finite through clamping
  CHECK(std::isfinite(NeTfVectorizer::ne_weight(1.0, 0.0, 0.0005)));
}

TEST_CASE("empty corpus is rejected") {
  try {
    NeTfVectorizer::fit({}, dict_of({}));
    FAIL("expected EmptyCorpus");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyCorpus);
  }
}

TEST_CASE("vectorize is raw term count times NE and ignores unknown words") {
  const auto v = NeTfVectorizer::fit({"leak secret files", "secret plans"}, dict_of({{"secret", 0.01}}));
  CHECK(v.vectorize("").isZero());
  CHECK(v.vectorize("zzz qqq").isZero());
  const auto x = v.vectorize("secret secret secret");
  const int i = v.index_of("secret");
  CHECK(x(i) == doctest::Approx(3 * v.ne()[static_cast<std::size_t>(i)]).epsilon(1e-15));
  CHECK(x.norm() == doctest::Approx(std::abs(x(i))).epsilon(1e-15));
}

TEST_CASE("NNLS solution satisfies the KKT conditions") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 50; ++trial) {
    const MatrixXd A = MatrixXd::NullaryExpr(12, 6, [&] { return nd(rng); });
    const VectorXd b = VectorXd::NullaryExpr(12, [&] { return nd(rng); });
    const auto r = nnls(A, b);
    const VectorXd grad = A.transpose() * (b - A * r.lambda);  // negative gradient of 0.5||Ax-b||^2
    for (int j = 0; j < 6; ++j) {
      CHECK(r.lambda(j) >= 0);
      if (r.lambda(j) > 1e-10) CHECK(std::abs(grad(j)) < 1e-8);
      else CHECK(grad(j) < 1e-8);
    }
    CHECK(r.residual == doctest::Approx((A * r.lambda - b).norm()).epsilon(1e-10));
  }
}

TEST_CASE("cone contains its generators and their nonnegative combinations") {
  std::mt19937_64 rng(5);
  const MatrixXd V = random_basis(rng, 30, 6);
  const ConicalModel m("t", vocab(static_cast<int>(V.rows())), V);
  const auto r1 = m.in_cone(V.col(0));
  CHECK(r1.member);
  CHECK(r1.residual < 1e-12);
  CHECK((V * r1.lambda - V.col(0)).norm() < 1e-10);
  CHECK(m.in_cone(2 * V.col(0) + 3 * V.col(1)).member);
  CHECK_FALSE(m.in_cone(VectorXd::Zero(30)).member);
  try {
    m.in_cone(VectorXd::Ones(7));
    FAIL("expected DimensionMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DimensionMismatch);
  }
}

TEST_CASE("a unit vector orthogonal to the basis span has residual 1 (dense least-squares oracle)") {
  std::mt19937_64 rng(7);
  const MatrixXd V = random_basis(rng, 20, 5);
  std::normal_distribution<double> nd;
  VectorXd x = VectorXd::NullaryExpr(20, [&] { return nd(rng); });
  // Gram-Schmidt against an orthonormal basis of span(V)
  const MatrixXd Q = V.householderQr().householderQ() * MatrixXd::Identity(20, 5);
  for (int j = 0; j < 5; ++j) x -= Q.col(j).dot(x) * Q.col(j);
  x.normalize();
  const VectorXd ls = V.colPivHouseholderQr().solve(x);
  CHECK((V * ls - x).norm() == doctest::Approx(1.0).epsilon(1e-10));
  const ConicalModel m("t", vocab(static_cast<int>(V.rows())), V);
  const auto r = m.in_cone(x);
  CHECK_FALSE(r.member);
  CHECK(r.residual == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("property: membership is scale invariant and NNLS beats clipped least squares") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 100; ++trial) {
    const MatrixXd V = random_basis(rng, 15, 5);
    const ConicalModel m("t", vocab(static_cast<int>(V.rows())), V);
    const VectorXd x = trial % 2 ? VectorXd(V * VectorXd::NullaryExpr(5, [&] { return u(rng); }))
                                 : VectorXd(VectorXd::NullaryExpr(15, [&] { return nd(rng); }));
    const auto r = m.in_cone(x);
    for (double c : {1e-3, 0.5, 7.0, 1e4}) CHECK(m.in_cone(c * x).member == r.member);
    if (r.member) {
      CHECK((r.lambda.array() >= 0).all());
      CHECK((V * r.lambda - x).norm() <= m.residual_tol() * x.norm() + 1e-15);
    }
    const VectorXd clipped = V.colPivHouseholderQr().solve(x).cwiseMax(0.0);
    CHECK(r.residual <= (V * clipped - x).norm() + 1e-12);
  }
}

TEST_CASE("text classifier accepts training documents and their concatenations, rejects empty text") {
  const auto& docs = synth::seed_documents(Topic::Wikileaks);
  const auto m = ConicalModel::fit("wikileaks", docs, synth::seed_dictionary());
  for (const auto& d : docs) CHECK(m.classify_text(d));
  CHECK(m.classify_text(docs[0] + " " + docs[1]));
  CHECK_FALSE(m.classify_text(""));
  CHECK_FALSE(m.classify_text("the quarterly budget meeting moved to thursday"));
  // basis columns are members with zero residual
  for (int j = 0; j < m.basis().cols(); ++j) CHECK(m.in_cone(m.basis().col(j)).residual < 1e-9);
}

TEST_CASE("model JSON round-trip keeps vocabulary, weights, basis and tolerance") {
  const auto m = ConicalModel::fit("job", synth::seed_documents(Topic::JobSite), synth::seed_dictionary(), 1e-5);
  const auto back = ConicalModel::from_json(m.to_json());
  CHECK(back.name() == "job");
  CHECK(back.residual_tol() == 1e-5);
  CHECK(back.vectorizer().vocabulary() == m.vectorizer().vocabulary());
  CHECK(back.vectorizer().ne() == m.vectorizer().ne());
  CHECK(back.basis() == m.basis());
  CHECK(back.to_json() == m.to_json());
  CHECK_THROWS_AS(ConicalModel::from_json("{\"format\":\"nope\"}"), Error);
}
