#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "chromabehave/detector.hpp"
#include "chromabehave/encoder.hpp"

namespace chromabehave::explain {

/// Coalition over players as a bitmask (bit i = player i present).
using Coalition = std::uint64_t;
inline constexpr int kMaxPlayers = 30;

/// Characteristic function of a cooperative game.
using ValueFn = std::function<double(Coalition)>;

struct AttributionConfig {
  int permutations = 200;
  int subsets = 512;
  std::uint64_t seed = 7;
};

struct PlayerAttribution {
  std::string name;
  double shapley = 0, shapley_se = 0;
  double banzhaf = 0, banzhaf_se = 0;
  double remove_individual = 0;
  double include_individual = 0;
  double mean_when_included = 0, mean_when_included_se = 0;
};

struct AttributionReport {
  std::vector<PlayerAttribution> players;
  double value_full = 0;
  double value_empty = 0;
  int permutations = 0;
  int subsets = 0;
  std::uint64_t seed = 0;

  double shapley_sum() const;
  /// Standard error of the Shapley sum assuming independent estimates.
  double shapley_sum_se() const;
  std::string to_json() const;
};

/// Shapley by sampled permutations (antithetic pairs), Banzhaf and
/// mean-when-included by uniform random coalitions, remove/include
/// individual exactly. `value` is called once per distinct coalition.
AttributionReport attribute(const ValueFn& value, int n_players, const AttributionConfig& cfg = {},
                            const std::vector<std::string>& names = {});

/// Exact Shapley values by enumerating all coalitions (small games only).
std::vector<double> exact_shapley(const ValueFn& value, int n_players);

/// Model outputs for evaluation rows whose explained features were replaced.
/// rows(j, :) is the feature vector to score in place of evaluation row
/// owner[j].
using BatchModel = std::function<Eigen::VectorXd(std::span<const std::size_t> owner, const Eigen::MatrixXd& rows)>;

struct ExplainerConfig {
  /// Nearest background rows used for the conditional approximation.
  int neighbors = 25;
  /// Draws per evaluation when sampling marginally.
  int samples = 25;
  /// Marginal fallback ignores the kept features when picking background rows.
  bool conditional = true;
  std::uint64_t seed = 7;
};

/// Feature-removal explainer: removed features are replaced with values from
/// background rows, chosen near the kept features (conditional) or at random
/// (marginal), and the model output is averaged.
class RemovalExplainer {
 public:
  /// Throws EmptyBackground, DimensionMismatch.
  RemovalExplainer(BatchModel model, Eigen::MatrixXd eval_x, std::vector<int> eval_y, Eigen::MatrixXd background,
                   ExplainerConfig cfg = {});

  /// Surrogate output for evaluation row `row` keeping features in `kept`
  /// (indices into the feature vector).
  double surrogate_eval(std::size_t row, const std::vector<bool>& kept) const;
  /// Same for an arbitrary vector scored as evaluation row 0's context.
  double surrogate_eval(const Eigen::VectorXd& x, const std::vector<bool>& kept) const;

  /// Negative mean binary cross-entropy over the evaluation set with only the
  /// chosen players kept; features outside `players` are always kept.
  double dataset_value(const std::vector<int>& players, Coalition coalition) const;

  /// Attributions over `players` with a per-coalition cache.
  AttributionReport attribute(const std::vector<int>& players, const std::vector<std::string>& names,
                              const AttributionConfig& cfg = {}) const;

  std::size_t features() const { return static_cast<std::size_t>(background_.cols()); }
  std::size_t eval_rows() const { return static_cast<std::size_t>(eval_x_.rows()); }

 private:
  /// Background row indices that fill in the removed features for `x`.
  std::vector<std::size_t> donors(const Eigen::VectorXd& x, const std::vector<bool>& kept, std::uint64_t salt) const;
  Eigen::VectorXd surrogate_batch(const std::vector<bool>& kept) const;

  BatchModel model_;
  Eigen::MatrixXd eval_x_;
  std::vector<int> eval_y_;
  Eigen::MatrixXd background_;
  Eigen::RowVectorXd scale_;
  ExplainerConfig cfg_;
};

/// Scores feature rows through the encoder and the detector, keeping each
/// evaluation sample's context channels and non-dynamic features. Both models
/// must outlive the returned function.
BatchModel detector_model(const encoder::SaeModel& sae, const detector::DetectionModel& model,
                          std::vector<detector::Sample> eval);

/// Parses a comma-separated list of feature names; `*` suffix matches a prefix.
std::vector<int> parse_feature_list(const std::string& spec);

}  // namespace chromabehave::explain
