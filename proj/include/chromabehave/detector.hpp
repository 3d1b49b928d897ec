#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <array>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "chromabehave/encoder.hpp"

namespace chromabehave::detector {

inline constexpr int kOceanDims = 5;

/// Role one-hot followed by the five OCEAN scores.
struct NonDynamicFeatures {
  Eigen::VectorXd values;
};

/// Builds the non-dynamic vector for `record` given the role vocabulary.
/// Roles outside the vocabulary get an all-zero one-hot block.
NonDynamicFeatures non_dynamic(const std::vector<std::string>& roles, const ingest::LdapRecord& record);
std::vector<std::string> role_vocabulary(const std::vector<ingest::LdapRecord>& ldap);

struct AugmentConfig {
  bool swap = true;
  /// Context-replacement variants generated per malicious training day.
  int replace = 4;
};

struct DetectorConfig {
  int conv1 = 16;
  int conv2 = 32;
  int dense = 64;
  double lr = 0.01;
  int batch = 128;
  int epochs = 12;
  std::uint64_t seed = 7;
  AugmentConfig augment;
};

/// Trunk: conv3x3(same) -> ReLU -> maxpool2 -> conv3x3(same) -> ReLU -> global
/// average pool. Head: concat(trunk, non-dynamic) -> dense ReLU -> dense -> sigmoid.
struct CnnParams {
  Eigen::MatrixXd w1;  // conv1 x (in_channels*9)
  Eigen::VectorXd b1;
  Eigen::MatrixXd w2;  // conv2 x (conv1*9)
  Eigen::VectorXd b2;
  Eigen::MatrixXd w3;  // dense x (conv2 + nd)
  Eigen::VectorXd b3;
  Eigen::MatrixXd w4;  // 1 x dense
  Eigen::VectorXd b4;  // 1

  static CnnParams init(int in_channels, int conv1, int conv2, int dense, int nd_dim, std::uint64_t seed);
  int in_channels() const { return static_cast<int>(w1.cols() / 9); }
  int nd_dim() const { return static_cast<int>(w3.cols() - w2.rows()); }

  /// Flat views of every tensor in a fixed order (optimizers, checks).
  std::array<Eigen::Map<Eigen::VectorXd>, 8> flat();
  std::array<Eigen::Map<const Eigen::VectorXd>, 8> flat() const;
  /// Same shapes as `other`, all zeros.
  static CnnParams zeros_like(const CnnParams& other);
};

/// A batch of n images in channel-major layout: row = channel, column =
/// sample * (height*width) + y * width + x.
struct Batch {
  int n = 0;
  int height = 0;
  int width = 0;
  Eigen::MatrixXd x;   // channels x (n*h*w)
  Eigen::MatrixXd nd;  // nd_dim x n
  Eigen::VectorXd y;   // n labels in {0,1}
};

/// Logits for every sample.
Eigen::VectorXd forward_logits(const CnnParams& p, const Batch& batch);

/// Mean binary cross-entropy over the batch; fills `grad` when non-null.
double loss_and_gradient(const CnnParams& p, const Batch& batch, CnnParams* grad);
/// Gradient of sum_i w_i * logit_i with respect to the input pixels.
Eigen::MatrixXd logit_input_gradient(const CnnParams& p, const Batch& batch, const Eigen::VectorXd& w);

struct DetectionModel {
  CnnParams params;
  std::vector<std::string> roles;
  DetectorConfig config;
  /// Mean non-dynamic vector of the training set (activation maximization input).
  Eigen::VectorXd nd_mean;

  std::string to_json() const;
  static DetectionModel from_json(std::string_view text);
  void save(const std::filesystem::path& path) const;
  static DetectionModel load(const std::filesystem::path& path);
};

/// One detector input.
struct Sample {
  encoder::ColorEncoding image;
  Eigen::VectorXd nd;
  int label = 0;
  features::Label scenario = features::Label::Benign;
};

Batch make_batch(std::span<const Sample> samples, std::span<const std::size_t> index);
Batch make_batch(std::span<const Sample> samples);

/// Adds swap / replace variants of every malicious sample. The replacement
/// pool for a user is the R channel of that user's benign samples.
std::vector<Sample> augment_training_set(const std::vector<Sample>& train, const AugmentConfig& cfg,
                                         std::mt19937_64& rng);

struct Metrics {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  double balanced_accuracy = 0, precision = 0, recall = 0, f1 = 0;
  static Metrics from_counts(std::size_t tp, std::size_t fp, std::size_t tn, std::size_t fn);
};

struct TrainReport {
  std::vector<double> train_loss;
  std::vector<double> val_f1;
  std::vector<double> val_loss;
  int best_epoch = -1;
  std::size_t train_size = 0;
};

/// Adam on mean BCE; returns the epoch checkpoint with the best validation
/// F1 (ties broken by lower validation loss). Throws SingleClassTrainingSet.
DetectionModel train_classifier(const std::vector<Sample>& train, const std::vector<Sample>& val,
                                const std::vector<std::string>& roles, const DetectorConfig& cfg,
                                TrainReport* report = nullptr);

/// Continues training from `base` on `train` with the given learning rate.
DetectionModel fine_tune(const DetectionModel& base, const std::vector<Sample>& train, const std::vector<Sample>& val,
                         double lr, int epochs, TrainReport* report = nullptr);

double predict(const DetectionModel& model, const encoder::ColorEncoding& img, const NonDynamicFeatures& nd);
std::vector<double> predict_batch(const DetectionModel& model, std::span<const Sample> samples);

Metrics evaluate(const DetectionModel& model, std::span<const Sample> test);
Metrics metrics_from_scores(std::span<const double> probs, std::span<const int> labels, double threshold = 0.5);

enum class Target { Benign, Malicious };

struct ActMaxResult {
  std::vector<double> pixels;  // 32x32x3 interleaved, in [0,255]
  /// Model probability of the target class for the final image.
  double probability = 0;
  encoder::ColorEncoding rounded() const;
};

struct ActMaxConfig {
  int steps = 256;
  double lr = 1.0;
  double init_grey = 128;
  double init_noise = 8;
  std::uint64_t seed = 7;
};

/// Gradient ascent on the target logit; each step moves every pixel by
/// lr times the RMS-normalized gradient and clips to [0,255].
ActMaxResult activation_maximization(const DetectionModel& model, Target target, const ActMaxConfig& cfg = {});

}  // namespace chromabehave::detector
