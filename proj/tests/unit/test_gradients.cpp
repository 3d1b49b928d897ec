#include <random>

#include "chromabehave/detector.hpp"
#include "chromabehave/encoder.hpp"
#include "doctest.h"
#include "gradcheck.hpp"

using namespace chromabehave;
using Eigen::MatrixXd;
using Eigen::VectorXd;

TEST_CASE("SAE analytic gradient matches central differences on a 5-input/8-hidden toy") {
  auto model = encoder::SaeModel::init(5, 8, 11);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd(0.0, 1.0);
  model.input_mean = VectorXd::NullaryExpr(5, [&] { return nd(rng); });
  model.input_scale = VectorXd::NullaryExpr(5, [&] { return 0.5 + std::abs(nd(rng)); });
  model.b_enc = VectorXd::NullaryExpr(8, [&] { return 0.3 * nd(rng); });
  model.b_dec = VectorXd::NullaryExpr(5, [&] { return 0.3 * nd(rng); });
  MatrixXd batch = MatrixXd::NullaryExpr(7, 5, [&] { return nd(rng); });

  encoder::SaeGradient g;
  encoder::sae_loss_and_gradient(model, batch, g);
  auto loss = [&] { return encoder::sae_loss(model, batch).total; };
  CHECK(testutil::max_relative_error(model.w_enc.reshaped(), g.w_enc.reshaped(), loss) < 1e-4);
  CHECK(testutil::max_relative_error(model.b_enc, g.b_enc, loss) < 1e-4);
  CHECK(testutil::max_relative_error(model.w_dec.reshaped(), g.w_dec.reshaped(), loss) < 1e-4);
  CHECK(testutil::max_relative_error(model.b_dec, g.b_dec, loss) < 1e-4);
}

TEST_CASE("CNN analytic gradient matches central differences on 4x4 inputs") {
  const int nd_dim = 4;
  auto p = detector::CnnParams::init(3, 4, 5, 6, nd_dim, 21);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto m : p.flat())
    if (m.size() <= 6) m = VectorXd::NullaryExpr(m.size(), [&] { return 0.1 * nd(rng); });
  detector::Batch b;
  b.n = 3;
  b.height = 4;
  b.width = 4;
  b.x = MatrixXd::NullaryExpr(3, 3 * 16, [&] { return u(rng); });
  b.nd = MatrixXd::NullaryExpr(nd_dim, 3, [&] { return u(rng); });
  b.y = VectorXd(3);
  b.y << 1, 0, 1;

  auto g = detector::CnnParams::zeros_like(p);
  detector::loss_and_gradient(p, b, &g);
  auto loss = [&] { return detector::loss_and_gradient(p, b, nullptr); };
  auto params = p.flat();
  auto grads = g.flat();
  for (std::size_t k = 0; k < params.size(); ++k) {
    CAPTURE(k);
    CHECK(testutil::max_relative_error(params[k], grads[k], loss) < 1e-4);
  }

  // Input gradient of the summed logits.
  const VectorXd w = VectorXd::Ones(3);
  const MatrixXd dx = detector::logit_input_gradient(p, b, w);
  auto logit_sum = [&] { return detector::forward_logits(p, b).sum(); };
  CHECK(testutil::max_relative_error(b.x.reshaped(), dx.reshaped(), logit_sum) < 1e-4);
}
