#pragma once

// Central finite-difference helpers shared by the SAE and CNN gradient tests.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>

namespace testutil {

/// Max over entries of |analytic - numeric| / max(|analytic|, |numeric|, floor).
inline double max_relative_error(Eigen::Ref<Eigen::VectorXd> param, const Eigen::VectorXd& analytic,
                                 const std::function<double()>& loss, double h = 1e-6, double floor = 1e-7) {
  double worst = 0;
  for (Eigen::Index i = 0; i < param.size(); ++i) {
    const double saved = param(i);
    param(i) = saved + h;
    const double up = loss();
    param(i) = saved - h;
    const double down = loss();
    param(i) = saved;
    const double numeric = (up - down) / (2 * h);
    const double denom = std::max({std::abs(analytic(i)), std::abs(numeric), floor});
    worst = std::max(worst, std::abs(analytic(i) - numeric) / denom);
  }
  return worst;
}

}  // namespace testutil
