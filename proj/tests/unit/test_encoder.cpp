#include <algorithm>
#include <cmath>
#include <random>

#include "chromabehave/encoder.hpp"
#include "doctest.h"

using namespace chromabehave;
using namespace chromabehave::encoder;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr double kLambda = 1.0507009873554804934193349852946;
constexpr double kAlpha = 1.6732632423543772848170429916717;

GreyscaleEncoding random_grey(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> u(0, 255);
  GreyscaleEncoding g;
  for (auto& p : g.pixels) p = static_cast<std::uint8_t>(u(rng));
  return g;
}

features::LabeledDay day(const std::string& user, Date d, double v, features::Label l = features::Label::Benign) {
  features::LabeledDay x;
  x.day.user = user;
  x.day.date = d;
  x.day.f.fill(v);
  x.label = l;
  return x;
}

// Small trained-looking model: 25 inputs, 1024 units, min/max frozen on random data.
SaeModel frozen_model(std::uint64_t seed) {
  auto m = SaeModel::init(25, kHiddenUnits, seed);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  const MatrixXd data = MatrixXd::NullaryExpr(200, 25, [&] { return nd(rng); });
  freeze_minmax(m, data);
  return m;
}

}  // namespace

TEST_CASE("KL of Bernoulli(0.45) against 0.5 is 0.00501 and vanishes at equality") {
  CHECK(kl_bernoulli(0.45, 0.5) == doctest::Approx(0.45 * std::log(0.9) + 0.55 * std::log(1.1)).epsilon(1e-15));
  CHECK(kl_bernoulli(0.45, 0.5) == doctest::Approx(0.00501).epsilon(1e-3));
  CHECK(kl_bernoulli(0.45, 0.45) == 0.0);
  for (double r = 0.01; r < 1.0; r += 0.01) {
    CHECK(kl_bernoulli(0.45, r) >= 0.0);
    if (std::abs(r - 0.45) > 1e-9) CHECK(kl_bernoulli(0.45, r) > 0.0);
  }
}

TEST_CASE("SELU matches its closed form") {
  CHECK(selu(2.0) == doctest::Approx(kLambda * 2.0).epsilon(1e-15));
  CHECK(selu(-1.0) == doctest::Approx(kLambda * kAlpha * (std::exp(-1.0) - 1.0)).epsilon(1e-15));
  CHECK(selu(0.0) == 0.0);
}

TEST_CASE("forward pass with zero parameters is zero and has the contracted shapes") {
  auto m = SaeModel::init(25, kHiddenUnits, 1);
  m.w_enc.setZero();
  m.w_dec.setZero();
  const auto out = sae_forward(m, VectorXd::Random(25));
  CHECK(out.hidden.size() == 1024);
  CHECK(out.reconstruction.size() == 25);
  CHECK(out.hidden.isZero());
  CHECK(out.reconstruction.isZero());
}

TEST_CASE("forward pass of a one-unit toy matches hand computation") {
  auto m = SaeModel::init(2, 1, 1);
  m.w_enc << 1.0, -1.0;
  m.b_enc << 0.5;
  m.w_dec << 2.0, 0.0;
  m.b_dec << 0.1, -0.1;
  VectorXd x(2);
  x << 1.0, 0.25;
  const auto out = sae_forward(m, x);
  const double h = kLambda * 1.25;
  CHECK(out.hidden(0) == doctest::Approx(h).epsilon(1e-15));
  CHECK(out.reconstruction(0) == doctest::Approx(2 * h + 0.1).epsilon(1e-15));
  CHECK(out.reconstruction(1) == doctest::Approx(-0.1).epsilon(1e-15));

  VectorXd bad = x;
  bad(1) = std::nan("");
  try {
    sae_forward(m, bad);
    FAIL("expected NonFiniteInput");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonFiniteInput);
  }
}

TEST_CASE("loss is zero for perfect reconstruction at the target sparsity") {
  auto m = SaeModel::init(3, 4, 1);
  m.w_enc.setZero();
  m.w_dec.setZero();
  // selu(b) = logit(rho) makes every squashed activation exactly rho
  const double target = std::log(0.45 / 0.55);
  const double b = std::log(1.0 + target / (kLambda * kAlpha));
  m.b_enc.setConstant(b);
  MatrixXd batch(5, 3);
  batch.rowwise() = Eigen::RowVector3d(1.0, -2.0, 0.5);
  m.input_mean = batch.row(0).transpose();
  const auto l = sae_loss(m, batch);
  CHECK(l.kl == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(l.recon == 0.0);
  CHECK(std::abs(l.total) < 1e-12);
}

TEST_CASE("training lowers the loss and is bit-identical for a fixed seed") {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> nd;
  MatrixXd data = MatrixXd::NullaryExpr(500, 25, [&] { return nd(rng); });
  data.col(3) = 2.0 * data.col(0) + data.col(1);  // some learnable structure
  SaeHyper h;
  h.epochs = 20;
  h.patience = 0;
  h.lr = 1e-3;
  SaeTrainReport r1, r2;
  const auto a = train_sae(data, h, &r1);
  const auto b = train_sae(data, h, &r2);
  CHECK(r1.epoch_loss.back() < r1.initial_loss);
  CHECK(a.to_json() == b.to_json());
  CHECK(a.hidden() == 1024);
  for (int j = 0; j < a.hidden(); ++j) CHECK(a.unit_min(j) <= a.unit_max(j));
}

TEST_CASE("grey pixels map unit range endpoints to 0 and 255, zero-range units to 0") {
  auto m = SaeModel::init(25, kHiddenUnits, 3);
  m.unit_min.setConstant(-1.0);
  m.unit_max.setConstant(1.0);
  m.unit_max(7) = m.unit_min(7);  // dead unit
  VectorXd h = VectorXd::Zero(kHiddenUnits);
  h(0) = 1.0;   // at max
  h(1) = -1.0;  // at min
  h(2) = 5.0;   // beyond max: clipped
  h(7) = 3.0;
  const auto px = grey_pixels(m, h);
  CHECK(px[0] == 255);
  CHECK(px[1] == 0);
  CHECK(px[2] == 255);
  CHECK(px[7] == 0);
  CHECK(px[3] == 128);  // round(127.5)
}

TEST_CASE("encoding survives model serialization exactly") {
  const auto m = frozen_model(5);
  const auto back = SaeModel::from_json(m.to_json());
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd;
  for (int k = 0; k < 20; ++k) {
    features::FeatureVector x;
    for (auto& v : x) v = 3 * nd(rng);
    CHECK(encode_grey(m, x).pixels == encode_grey(back, x).pixels);
  }
  // batch path agrees with the single path
  MatrixXd rows = MatrixXd::NullaryExpr(10, 25, [&] { return nd(rng); });
  const auto batch = encode_grey_batch(m, rows);
  for (int i = 0; i < 10; ++i) {
    features::FeatureVector x;
    for (int j = 0; j < 25; ++j) x[static_cast<std::size_t>(j)] = rows(i, j);
    CHECK(batch[static_cast<std::size_t>(i)] == encode_grey(m, x).pixels);
  }
}

TEST_CASE("composition places current/ctx1/ctx2 in R/G/B and extraction inverts it") {
  std::mt19937_64 rng(2);
  const auto a = random_grey(rng), b = random_grey(rng), c = random_grey(rng);
  const auto img = compose(Representation::Daily, a, b, c);
  CHECK(img.channel(0) == a.pixels);
  CHECK(img.channel(1) == b.pixels);
  CHECK(img.channel(2) == c.pixels);

  const auto grey = compose(Representation::Daily, a, a, a);
  for (int p = 0; p < kImagePixels; ++p) {
    CHECK(grey.at(p, 0) == grey.at(p, 1));
    CHECK(grey.at(p, 1) == grey.at(p, 2));
  }
  GreyscaleEncoding shifted = a;
  for (auto& p : shifted.pixels) p = static_cast<std::uint8_t>((p + 128) % 256);
  const auto colorful = compose(Representation::Daily, shifted, a, a);
  for (int p = 0; p < kImagePixels; ++p) CHECK(colorful.at(p, 0) != colorful.at(p, 1));
}

TEST_CASE("swap exchanges contexts, is an involution and keeps R") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const auto img = compose(Representation::Daily, random_grey(rng), random_grey(rng), random_grey(rng));
    const auto s = augment_swap(img);
    CHECK(s.channel(0) == img.channel(0));
    CHECK(s.channel(1) == img.channel(2));
    CHECK(s.channel(2) == img.channel(1));
    CHECK(augment_swap(s).pixels == img.pixels);
  }
  const auto g = random_grey(rng);
  const auto fixed = compose(Representation::Daily, random_grey(rng), g, g);
  CHECK(augment_swap(fixed).pixels == fixed.pixels);
}

TEST_CASE("replace draws two distinct pool entries, keeps R and is seeded") {
  std::mt19937_64 rng(6);
  const auto img = compose(Representation::Daily, random_grey(rng), random_grey(rng), random_grey(rng));
  const std::vector<GreyPixels> pool2{random_grey(rng).pixels, random_grey(rng).pixels};
  std::mt19937_64 r1(10), r2(10);
  const auto a = augment_replace(img, pool2, r1);
  CHECK(((a.channel(1) == pool2[0] && a.channel(2) == pool2[1]) || (a.channel(1) == pool2[1] && a.channel(2) == pool2[0])));
  CHECK(augment_replace(img, pool2, r2).pixels == a.pixels);

  std::vector<GreyPixels> pool;
  for (int k = 0; k < 9; ++k) pool.push_back(random_grey(rng).pixels);
  std::mt19937_64 r3(11);
  for (int k = 0; k < 100; ++k) {
    const auto out = augment_replace(img, pool, r3);
    CHECK(out.channel(0) == img.channel(0));
    CHECK(out.channel(1) != out.channel(2));
  }
  std::mt19937_64 r4(1);
  try {
    augment_replace(img, {}, r4);
    FAIL("expected EmptyPool");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyPool);
  }
}

TEST_CASE("identical features on consecutive days compose to a pure grey daily image") {
  const auto m = frozen_model(8);
  std::vector<features::LabeledDay> days;
  const Date d0 = Date::from_ymd(2010, 2, 1);
  for (int k = 0; k < 3; ++k) days.push_back(day("U1", d0 + k, 0.7));
  const auto data = compose_dataset(m, Representation::Daily, days);
  REQUIRE(data.size() == 1);
  int spread = 0;
  for (int p = 0; p < kImagePixels; ++p) {
    const auto r = data[0].image.at(p, 0), g = data[0].image.at(p, 1), b = data[0].image.at(p, 2);
    spread = std::max(spread, std::max({r, g, b}) - std::min({r, g, b}));
  }
  CHECK(spread == 0);
}

TEST_CASE("daily plans use the two previous observed days and carry the any-channel label") {
  std::vector<features::LabeledDay> days;
  const Date d0 = Date::from_ymd(2010, 2, 1);
  days.push_back(day("U1", d0, 1));
  days.push_back(day("U1", d0 + 1, 2, features::Label::Scenario2));
  days.push_back(day("U1", d0 + 3, 3));  // gap: previous observed day is d0+1
  days.push_back(day("U1", d0 + 4, 4));
  days.push_back(day("U2", d0, 1));
  const auto plans = plan_contexts(Representation::Daily, days);
  REQUIRE(plans.size() == 2);
  CHECK(plans[0].current == 2);
  CHECK(plans[0].ctx1 == std::vector<std::size_t>{1});
  CHECK(plans[0].ctx2 == std::vector<std::size_t>{0});
  const auto data = compose_dataset(frozen_model(3), Representation::Daily, days);
  REQUIRE(data.size() == 2);
  CHECK(data[0].label == features::Label::Benign);
  CHECK(data[0].any_channel_malicious);   // context day is malicious
  CHECK(data[1].any_channel_malicious);   // d0+1 is still ctx2 of d0+4
}

TEST_CASE("historical plans average all earlier days and the trailing week") {
  std::vector<features::LabeledDay> days;
  const Date d0 = Date::from_ymd(2010, 2, 1);
  for (int k = 0; k < 10; ++k) days.push_back(day("U1", d0 + k, k));
  const auto plans = plan_contexts(Representation::Historical, days);
  const auto& last = plans.back();
  CHECK(last.current == 9);
  CHECK(last.ctx1.size() == 9);
  CHECK(last.ctx2.size() == 7);
  CHECK(*std::min_element(last.ctx2.begin(), last.ctx2.end()) == 2);
}

TEST_CASE("role plans use same-role colleagues and teammates, never the user") {
  std::vector<ingest::LdapRecord> ldap(4);
  const char* roles[] = {"Engineer", "Engineer", "Salesman", "Engineer"};
  const char* teams[] = {"T1", "T2", "T1", "T2"};
  for (int i = 0; i < 4; ++i) {
    ldap[static_cast<std::size_t>(i)].user = "U" + std::to_string(i);
    ldap[static_cast<std::size_t>(i)].role = roles[i];
    ldap[static_cast<std::size_t>(i)].team = teams[i];
  }
  const Date d = Date::from_ymd(2010, 2, 1);
  std::vector<features::LabeledDay> days;
  for (int i = 0; i < 4; ++i) days.push_back(day("U" + std::to_string(i), d, i));
  const auto plans = plan_contexts(Representation::Role, days, ldap);
  for (const auto& p : plans) {
    const auto& me = days[p.current].day.user;
    for (auto i : p.ctx1) CHECK(days[i].day.user != me);
    for (auto i : p.ctx2) CHECK(days[i].day.user != me);
  }
  // U0: role peers U1,U3; teammate U2
  auto it = std::find_if(plans.begin(), plans.end(), [&](const ContextPlan& p) { return p.current == 0; });
  REQUIRE(it != plans.end());
  CHECK(it->ctx1 == std::vector<std::size_t>{1, 3});
  CHECK(it->ctx2 == std::vector<std::size_t>{2});
}

TEST_CASE("property: encodings stay in range and channel extraction is lossless") {
  const auto m = frozen_model(12);
  std::mt19937_64 rng(13);
  std::normal_distribution<double> nd;
  for (int k = 0; k < 100; ++k) {
    features::FeatureVector x;
    for (auto& v : x) v = 50 * nd(rng);  // far outside the frozen range
    const auto g = encode_grey(m, x);
    const auto img = compose(Representation::Daily, g, random_grey(rng), random_grey(rng));
    CHECK(img.channel(0) == g.pixels);
  }
}
