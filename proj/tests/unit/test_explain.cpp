#include <bit>
#include <cmath>
#include <random>

#include "chromabehave/explain.hpp"
#include "doctest.h"

using namespace chromabehave;
using namespace chromabehave::explain;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// Weighted-majority style game with interactions; values differ per coalition.
double four_player_game(Coalition c) {
  const bool a = c & 1, b = c & 2, d = c & 4, e = c & 8;
  return 3.0 * a + 1.5 * b + 0.5 * d + 2.0 * (a && b) - 1.0 * (b && d) + 4.0 * (a && d && e) + 0.25 * e;
}

// Textbook exact Shapley value by enumerating all n! orderings.
std::vector<double> shapley_by_orderings(const ValueFn& v, int n) {
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> phi(static_cast<std::size_t>(n), 0.0);
  double count = 0;
  do {
    Coalition c = 0;
    for (int p : order) {
      const double before = v(c);
      c |= Coalition{1} << p;
      phi[static_cast<std::size_t>(p)] += v(c) - before;
    }
    ++count;
  } while (std::next_permutation(order.begin(), order.end()));
  for (auto& x : phi) x /= count;
  return phi;
}

// f(x) = sum of the first two features, ignoring the rest.
BatchModel additive_model() {
  return [](std::span<const std::size_t>, const MatrixXd& rows) -> VectorXd { return rows.col(0) + rows.col(1); };
}

// Squashed linear score for dataset-value tests; feature 2 is never read.
BatchModel logistic_model() {
  return [](std::span<const std::size_t>, const MatrixXd& rows) -> VectorXd {
    VectorXd z = 2.0 * rows.col(0) - 1.5 * rows.col(1);
    return z.unaryExpr([](double t) { return 1.0 / (1.0 + std::exp(-t)); });
  };
}

MatrixXd gaussian(std::mt19937_64& rng, int n, int d) {
  std::normal_distribution<double> nd;
  return MatrixXd::NullaryExpr(n, d, [&] { return nd(rng); });
}

}  // namespace

TEST_CASE("symmetric two-player game v(S)=|S| gives one unit to each player") {
  const ValueFn v = [](Coalition c) { return static_cast<double>(std::popcount(c)); };
  const auto rep = attribute(v, 2, {50, 64, 3});
  for (const auto& p : rep.players) {
    CHECK(p.shapley == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(p.banzhaf == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(p.remove_individual == 1.0);
    CHECK(p.include_individual == 1.0);
  }
  CHECK(exact_shapley(v, 2) == std::vector<double>{1.0, 1.0});
}

TEST_CASE("a null player gets zero from every difference-based summary") {
  // player 2 never changes the value
  const ValueFn v = [](Coalition c) { return four_player_game(c & 0b1011); };
  const auto rep = attribute(v, 4, {200, 512, 5});
  const auto& p = rep.players[2];
  CHECK(p.shapley == 0.0);
  CHECK(p.banzhaf == 0.0);
  CHECK(p.remove_individual == 0.0);
  CHECK(p.include_individual == 0.0);
  // Mean-when-included is an average value, not a difference: for a null
  // player it equals the unconditional mean value over all coalitions.
  double overall = 0;
  for (Coalition c = 0; c < 16; ++c) overall += v(c);
  overall /= 16;
  CHECK(std::abs(p.mean_when_included - overall) <= 3 * p.mean_when_included_se);
  const auto& informative = rep.players[0];
  CHECK(std::abs(informative.mean_when_included - overall) > 3 * informative.mean_when_included_se);
}

TEST_CASE("exact enumeration agrees with the ordering oracle") {
  const auto a = exact_shapley(four_player_game, 4);
  const auto b = shapley_by_orderings(four_player_game, 4);
  for (std::size_t i = 0; i < 4; ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
}

TEST_CASE("sampled Shapley on a four-player game matches exact values within 2%") {
  const auto exact = shapley_by_orderings(four_player_game, 4);
  const auto rep = attribute(four_player_game, 4, {200, 512, 7});
  for (std::size_t i = 0; i < 4; ++i) {
    CAPTURE(i);
    CHECK(std::abs(rep.players[i].shapley - exact[i]) <= 0.02 * std::abs(exact[i]));
  }
}

TEST_CASE("sampled Shapley below the ordering count stays within three standard errors") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> table(std::size_t{1} << 6);
    for (auto& x : table) x = nd(rng);
    const ValueFn v = [&](Coalition c) { return table[c]; };
    const auto exact = exact_shapley(v, 6);
    const auto rep = attribute(v, 6, {120, 64, static_cast<std::uint64_t>(trial)});
    CHECK(rep.permutations == 120);
    int outside = 0;
    for (std::size_t i = 0; i < 6; ++i) outside += std::abs(rep.players[i].shapley - exact[i]) > 3 * rep.players[i].shapley_se;
    CHECK(outside <= 1);
  }
}

TEST_CASE("property: Shapley efficiency within three standard errors on random games") {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 3 + trial % 6;
    std::vector<double> table(std::size_t{1} << n);
    for (auto& x : table) x = nd(rng);
    const ValueFn v = [&](Coalition c) { return table[c]; };
    const auto rep = attribute(v, n, {64, 128, static_cast<std::uint64_t>(trial)});
    const double gap = std::abs(rep.shapley_sum() - (rep.value_full - rep.value_empty));
    CHECK(gap <= 3.0 * rep.shapley_sum_se() + 1e-9);
    // remove/include individual are exact differences
    for (int i = 0; i < n; ++i) {
      const Coalition full = (Coalition{1} << n) - 1, bit = Coalition{1} << i;
      CHECK(rep.players[static_cast<std::size_t>(i)].remove_individual == table[full] - table[full & ~bit]);
      CHECK(rep.players[static_cast<std::size_t>(i)].include_individual == table[bit] - table[0]);
    }
  }
}

TEST_CASE("attributions are deterministic per seed and report their budgets") {
  const auto a = attribute(four_player_game, 4, {30, 40, 9});
  const auto b = attribute(four_player_game, 4, {30, 40, 9});
  CHECK(a.to_json() == b.to_json());
  // 4! orderings form 12 antithetic pairs, so the budget is capped there
  CHECK(a.permutations == 24);
  CHECK(attribute(four_player_game, 4, {10, 40, 9}).permutations == 10);
  CHECK(a.subsets == 40);
  CHECK(attribute(four_player_game, 4, {30, 40, 10}).to_json() != a.to_json());
  CHECK_THROWS_AS(attribute(four_player_game, 4, {0, 40, 9}), Error);
  CHECK_THROWS_AS(attribute(four_player_game, 4, {30, 40, 9}, {"a", "b"}), Error);
}

TEST_CASE("surrogate keeps everything exactly and marginalizes everything to the background mean") {
  std::mt19937_64 rng(1);
  const MatrixXd bg = gaussian(rng, 300, 4);
  const MatrixXd ev = gaussian(rng, 5, 4);
  const RemovalExplainer ex(additive_model(), ev, {0, 1, 0, 1, 0}, bg);
  const double bg_mean = (bg.col(0) + bg.col(1)).mean();
  for (std::size_t r = 0; r < 5; ++r) {
    CHECK(ex.surrogate_eval(r, {true, true, true, true}) == ev(static_cast<Eigen::Index>(r), 0) + ev(static_cast<Eigen::Index>(r), 1));
    CHECK(ex.surrogate_eval(r, {false, false, false, false}) == doctest::Approx(bg_mean).epsilon(1e-12));
  }
}

TEST_CASE("additive toy: keeping one feature averages the other over the background") {
  std::mt19937_64 rng(2);
  const MatrixXd bg = gaussian(rng, 2000, 3);
  const double mean2 = bg.col(1).mean();
  const double sd2 = std::sqrt((bg.col(1).array() - mean2).square().mean());
  for (bool conditional : {true, false}) {
    ExplainerConfig cfg;
    cfg.conditional = conditional;
    const int draws = conditional ? cfg.neighbors : cfg.samples;
    const MatrixXd ev = gaussian(rng, 10, 3);
    const RemovalExplainer ex(additive_model(), ev, std::vector<int>(10, 0), bg, cfg);
    for (std::size_t r = 0; r < 10; ++r) {
      const double expected = ev(static_cast<Eigen::Index>(r), 0) + mean2;
      const double got = ex.surrogate_eval(r, {true, false, false});
      CAPTURE(conditional);
      CHECK(std::abs(got - expected) <= 3.0 * sd2 / std::sqrt(static_cast<double>(draws)));
    }
  }
}

TEST_CASE("conditional surrogate follows dependence the marginal one ignores") {
  // feature 1 is a copy of feature 0, so keeping 0 pins 1 as well
  std::mt19937_64 rng(3);
  MatrixXd bg = gaussian(rng, 2000, 2);
  bg.col(1) = bg.col(0);
  MatrixXd ev(1, 2);
  ev << 2.0, 2.0;
  ExplainerConfig marginal;
  marginal.conditional = false;
  const RemovalExplainer cond(additive_model(), ev, {1}, bg);
  const RemovalExplainer marg(additive_model(), ev, {1}, bg, marginal);
  CHECK(std::abs(cond.surrogate_eval(0, {true, false}) - 4.0) < 0.2);
  CHECK(std::abs(marg.surrogate_eval(0, {true, false}) - 2.0) < 1.0);
}

TEST_CASE("dataset value is negative BCE and an untouched feature is a null player") {
  std::mt19937_64 rng(4);
  const MatrixXd bg = gaussian(rng, 400, 3);
  const MatrixXd ev = gaussian(rng, 40, 3);
  std::vector<int> y(40);
  for (int i = 0; i < 40; ++i) y[static_cast<std::size_t>(i)] = 2.0 * ev(i, 0) - 1.5 * ev(i, 1) > 0;
  const RemovalExplainer ex(logistic_model(), ev, y, bg);

  double bce = 0;
  for (int i = 0; i < 40; ++i) {
    const double p = 1.0 / (1.0 + std::exp(-(2.0 * ev(i, 0) - 1.5 * ev(i, 1))));
    bce -= y[static_cast<std::size_t>(i)] ? std::log(p) : std::log(1 - p);
  }
  CHECK(ex.dataset_value({0, 1, 2}, 0b111) == doctest::Approx(-bce / 40).epsilon(1e-9));

  const auto rep = ex.attribute({0, 1, 2}, {"a", "b", "unused"}, {100, 128, 1});
  CHECK(rep.players[0].shapley > 0.05);
  CHECK(rep.players[1].shapley > 0.05);
  // Removing the unused feature changes which neighbours are drawn, so its
  // scores are small rather than exactly zero.
  const auto& z = rep.players[2];
  for (double s : {z.shapley, z.banzhaf, z.remove_individual, z.include_individual})
    CHECK(std::abs(s) < 0.1 * rep.players[0].shapley);
  CHECK(std::abs(rep.shapley_sum() - (rep.value_full - rep.value_empty)) <= 3 * rep.shapley_sum_se() + 1e-9);
}

TEST_CASE("explainer rejects empty backgrounds and mismatched shapes") {
  try {
    RemovalExplainer(additive_model(), MatrixXd::Zero(1, 2), {0}, MatrixXd(0, 2));
    FAIL("expected EmptyBackground");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyBackground);
  }
  try {
    RemovalExplainer(additive_model(), MatrixXd::Zero(1, 2), {0}, MatrixXd::Zero(3, 3));
    FAIL("expected DimensionMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DimensionMismatch);
  }
}

TEST_CASE("feature lists accept names and prefix wildcards") {
  const auto ids = parse_feature_list("FPV, FPV_After,CC_*,FPV");
  REQUIRE(ids.size() == 6);
  CHECK(ids[0] == features::feature_index("FPV"));
  CHECK(ids[1] == features::feature_index("FPV_After"));
  CHECK(ids[2] == features::feature_index("CC_Disgruntled"));
  CHECK(ids[5] == features::feature_index("CC_Keylogger"));
  CHECK_THROWS_AS(parse_feature_list("nope"), Error);
  CHECK_THROWS_AS(parse_feature_list("ZZ*"), Error);
}
