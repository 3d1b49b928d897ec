#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <random>

#include "chromabehave/encoding_eval.hpp"
#include "doctest.h"

using namespace chromabehave;
using namespace chromabehave::eval;
using encoder::ColorEncoding;

namespace {

ColorEncoding constant(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  ColorEncoding img;
  for (int p = 0; p < encoder::kImagePixels; ++p) {
    img.at(p, 0) = r;
    img.at(p, 1) = g;
    img.at(p, 2) = b;
  }
  return img;
}

ColorEncoding random_image(std::mt19937_64& rng, int lo = 0) {
  std::uniform_int_distribution<int> u(lo, 255);
  ColorEncoding img;
  for (auto& v : img.pixels) v = static_cast<std::uint8_t>(u(rng));
  return img;
}

// Straight scalar loop over the documented formula, including sparse-pixel filling.
double colorfulness_oracle(const ColorEncoding& img) {
  const int n = encoder::kImagePixels;
  double mean[3] = {0, 0, 0};
  for (int p = 0; p < n; ++p)
    for (int c = 0; c < 3; ++c) mean[c] += img.at(p, c);
  for (double& m : mean) m /= n;
  std::vector<double> rg(n), yb(n);
  for (int p = 0; p < n; ++p) {
    double v[3];
    const bool sparse = img.at(p, 0) <= kSparseThreshold && img.at(p, 1) <= kSparseThreshold &&
                        img.at(p, 2) <= kSparseThreshold;
    for (int c = 0; c < 3; ++c) v[c] = sparse ? mean[c] : img.at(p, c);
    rg[static_cast<std::size_t>(p)] = v[0] - v[1];
    yb[static_cast<std::size_t>(p)] = 0.5 * (v[0] + v[1]) - v[2];
  }
  auto mu = [&](const std::vector<double>& x) { return std::accumulate(x.begin(), x.end(), 0.0) / n; };
  auto var = [&](const std::vector<double>& x) {
    const double m = mu(x);
    double s = 0;
    for (double e : x) s += (e - m) * (e - m);
    return s / n;
  };
  return std::sqrt(var(rg) + var(yb)) + 0.3 * std::sqrt(mu(rg) * mu(rg) + mu(yb) * mu(yb));
}

// Pearson correlation between a continuous series and 0/1 labels.
double pearson(const std::vector<double>& x, const std::vector<int>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

template <class F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("grey images have zero colorfulness") {
  CHECK(colorfulness(constant(90, 90, 90)) == 0.0);
  std::mt19937_64 rng(1);
  encoder::GreyscaleEncoding g;
  for (auto& p : g.pixels) p = static_cast<std::uint8_t>(rng() % 256);
  CHECK(colorfulness(encoder::compose(encoder::Representation::Daily, g, g, g)) == 0.0);
}

TEST_CASE("constant pure red has only the mean term") {
  const double expected = 0.3 * std::sqrt(255.0 * 255.0 + 127.5 * 127.5);
  CHECK(colorfulness(constant(255, 0, 0)) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(expected == doctest::Approx(85.53).epsilon(1e-4));
}

TEST_CASE("sparse pixels are counted and replaced by the channel means") {
  auto img = constant(200, 50, 10);
  for (int p = 0; p < 100; ++p) {
    img.at(p, 0) = 0;
    img.at(p, 1) = 1;
    img.at(p, 2) = 0;
  }
  const auto rep = colorfulness_report(img);
  CHECK(rep.sparse_pixels == 100);
  CHECK(rep.colorfulness == doctest::Approx(colorfulness_oracle(img)).epsilon(1e-12));
}

TEST_CASE("property: colorfulness matches the scalar oracle and its invariances") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const auto img = random_image(rng, trial % 3 == 0 ? 0 : 2);
    const double c = colorfulness(img);
    CHECK(std::abs(c - colorfulness_oracle(img)) < 1e-9);
    CHECK(c >= 0);

    // pixel permutation
    std::vector<int> perm(encoder::kImagePixels);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    ColorEncoding shuffled;
    for (int p = 0; p < encoder::kImagePixels; ++p)
      for (int ch = 0; ch < 3; ++ch) shuffled.at(p, ch) = img.at(perm[static_cast<std::size_t>(p)], ch);
    CHECK(std::abs(colorfulness(shuffled) - c) < 1e-9);

    // constant shift on all channels, keeping every pixel non-sparse and in range
    ColorEncoding lifted = random_image(rng, 2);
    for (auto& v : lifted.pixels) v = static_cast<std::uint8_t>(std::min<int>(v, 200));
    ColorEncoding shifted = lifted;
    for (auto& v : shifted.pixels) v = static_cast<std::uint8_t>(v + 40);
    CHECK(std::abs(colorfulness(shifted) - colorfulness(lifted)) < 1e-9);
  }
}

TEST_CASE("rgb buffer version agrees with the image version") {
  std::mt19937_64 rng(3);
  const auto img = random_image(rng);
  CHECK(colorfulness_rgb(img.pixels) == doctest::Approx(colorfulness(img)).epsilon(1e-14));
}

TEST_CASE("point-biserial examples and errors") {
  const std::vector<double> v{0, 0, 1, 1};
  const std::vector<int> l{0, 0, 1, 1};
  CHECK(point_biserial(v, l) == doctest::Approx(1.0).epsilon(1e-15));
  const std::vector<int> flipped{1, 1, 0, 0};
  CHECK(point_biserial(v, flipped) == doctest::Approx(-1.0).epsilon(1e-15));

  const std::vector<double> flat{2, 2, 2, 2};
  CHECK(code_of([&] { point_biserial(flat, l); }) == ErrorCode::SingleValue);
  const std::vector<int> one{1, 1, 1, 1};
  CHECK(code_of([&] { point_biserial(v, one); }) == ErrorCode::SingleClass);
  const std::vector<int> short_labels{0, 1};
  CHECK(code_of([&] { point_biserial(v, short_labels); }) == ErrorCode::LengthMismatch);
}

TEST_CASE("property: point-biserial equals Pearson with 0/1 labels and flips sign with them") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 3 + rng() % 200;
    std::vector<double> x(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = static_cast<int>(rng() % 2);
      x[i] = nd(rng) + 0.7 * y[i];
    }
    y[0] = 0;
    y[1] = 1;
    const double r = point_biserial(x, y);
    CHECK(std::abs(r - pearson(x, y)) < 1e-12);
    std::vector<int> inv(n);
    for (std::size_t i = 0; i < n; ++i) inv[i] = 1 - y[i];
    CHECK(std::abs(point_biserial(x, inv) + r) < 1e-12);
  }
}

TEST_CASE("correlation study labels by any-channel maliciousness") {
  std::vector<encoder::EncodedDay> data(4);
  data[0].image = constant(10, 10, 10);
  data[1].image = constant(30, 30, 30);
  data[2].image = constant(200, 20, 20);
  data[2].any_channel_malicious = true;
  data[3].image = constant(20, 200, 20);
  data[3].any_channel_malicious = true;
  const auto s = correlation_study(data);
  CHECK(s.labels == std::vector<int>{0, 0, 1, 1});
  CHECK(s.r > 0.9);
  CHECK(s.r == doctest::Approx(point_biserial(s.colorfulness, s.labels)).epsilon(1e-15));
}

TEST_CASE("PNG round trips colour and grey images byte for byte") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const auto img = random_image(rng);
    const auto bytes = write_png(img);
    CHECK(read_color_png(bytes).pixels == img.pixels);
    CHECK(write_png(img) == bytes);

    encoder::GreyPixels g;
    for (auto& p : g) p = static_cast<std::uint8_t>(rng() % 256);
    const auto gb = write_png(g);
    CHECK(read_grey_png(gb) == g);
    const auto dec = read_png(gb);
    CHECK(dec.channels == 1);
    CHECK(dec.width == 32);
    CHECK(dec.height == 32);
  }
}

TEST_CASE("truncated or garbage PNG is CorruptFile") {
  std::mt19937_64 rng(6);
  const auto bytes = write_png(random_image(rng));
  const std::vector<std::uint8_t> cut(bytes.begin(), bytes.begin() + static_cast<long>(bytes.size() / 2));
  CHECK(code_of([&] { read_png(cut); }) == ErrorCode::CorruptFile);
  const std::vector<std::uint8_t> junk{1, 2, 3, 4, 5};
  CHECK(code_of([&] { read_png(junk); }) == ErrorCode::CorruptFile);
  CHECK(code_of([&] { read_png({}); }) == ErrorCode::CorruptFile);
}

TEST_CASE("image dataset round-trips through a directory") {
  std::mt19937_64 rng(7);
  std::vector<encoder::EncodedDay> data(5);
  for (std::size_t i = 0; i < data.size(); ++i) {
    data[i].image = random_image(rng);
    data[i].image.user = "U" + std::to_string(i);
    data[i].image.date = Date::from_ymd(2010, 3, 1) + static_cast<int>(i);
    data[i].image.provenance = {"a", "b", "c"};
    data[i].image.representation = encoder::Representation::Historical;
    data[i].label = i == 2 ? features::Label::Scenario3 : features::Label::Benign;
    data[i].any_channel_malicious = i >= 2;
  }
  const auto dir = std::filesystem::temp_directory_path() / "cb_image_dataset";
  std::filesystem::remove_all(dir);
  save_image_dataset(dir, data);
  const auto back = load_image_dataset(dir);
  REQUIRE(back.size() == data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    CHECK(back[i].image.pixels == data[i].image.pixels);
    CHECK(back[i].image.user == data[i].image.user);
    CHECK(back[i].image.date == data[i].image.date);
    CHECK(back[i].image.provenance == data[i].image.provenance);
    CHECK(back[i].image.representation == data[i].image.representation);
    CHECK(back[i].label == data[i].label);
    CHECK(back[i].any_channel_malicious == data[i].any_channel_malicious);
  }
  std::filesystem::remove_all(dir);
}
