#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "chromabehave/features.hpp"

namespace chromabehave::encoder {

inline constexpr int kImageSide = 32;
inline constexpr int kImagePixels = kImageSide * kImageSide;
inline constexpr int kHiddenUnits = kImagePixels;

struct SaeHyper {
  double lr = 1e-4;
  int batch = 220;
  double beta = 0.68;
  double rho = 0.45;
  int epochs = 100;
  /// Stop when the epoch loss has not improved for this many epochs (0 disables).
  int patience = 10;
  std::uint64_t seed = 7;
};

/// Sparse autoencoder with a SELU hidden layer and linear reconstruction.
///
/// Inputs are z-scored with statistics frozen at training time, so raw
/// feature units (minutes, counts, bytes) do not dominate the loss.
struct SaeModel {
  Eigen::VectorXd input_mean;   // d
  Eigen::VectorXd input_scale;  // d, strictly positive
  Eigen::MatrixXd w_enc;        // h x d
  Eigen::VectorXd b_enc;        // h
  Eigen::MatrixXd w_dec;        // d x h
  Eigen::VectorXd b_dec;        // d
  double rho = 0.45;
  double beta = 0.68;
  /// Per-hidden-unit min/max over the training set, frozen after training.
  Eigen::VectorXd unit_min;
  Eigen::VectorXd unit_max;

  static SaeModel init(int inputs, int hidden, std::uint64_t seed, double rho = 0.45, double beta = 0.68);

  int inputs() const { return static_cast<int>(w_enc.cols()); }
  int hidden() const { return static_cast<int>(w_enc.rows()); }

  std::string to_json() const;
  static SaeModel from_json(std::string_view text);
  void save(const std::filesystem::path& path) const;
  static SaeModel load(const std::filesystem::path& path);
};

struct SaeOutput {
  Eigen::VectorXd hidden;
  Eigen::VectorXd reconstruction;  // in standardized input space
};

struct SaeLoss {
  double total = 0;
  double recon = 0;
  double kl = 0;  // sum over units, before the beta factor
};

struct SaeGradient {
  Eigen::MatrixXd w_enc;
  Eigen::VectorXd b_enc;
  Eigen::MatrixXd w_dec;
  Eigen::VectorXd b_dec;
};

double selu(double a);
double kl_bernoulli(double rho, double rho_hat);

/// Clamp range applied to the per-unit mean squashed activation.
inline constexpr double kRhoHatFloor = 1e-4;

SaeOutput sae_forward(const SaeModel& model, const Eigen::VectorXd& x);
/// Rows of `batch` are raw input vectors.
SaeLoss sae_loss(const SaeModel& model, const Eigen::MatrixXd& batch);
SaeLoss sae_loss_and_gradient(const SaeModel& model, const Eigen::MatrixXd& batch, SaeGradient& grad);

struct SaeTrainReport {
  std::vector<double> epoch_loss;
  double initial_loss = 0;
  int best_epoch = -1;
};

/// NAdam training followed by freezing of the per-unit min-max statistics.
SaeModel train_sae(const Eigen::MatrixXd& data, const SaeHyper& hyper, SaeTrainReport* report = nullptr,
                   int hidden = kHiddenUnits);

/// Recomputes unit_min/unit_max over `data`.
void freeze_minmax(SaeModel& model, const Eigen::MatrixXd& data);

// ---------------------------------------------------------------------------
// Images

using GreyPixels = std::array<std::uint8_t, kImagePixels>;

struct GreyscaleEncoding {
  GreyPixels pixels{};
  std::string user;
  Date date;
};

enum class Representation { Daily, Historical, Role };
std::string_view representation_name(Representation r);
Representation representation_from_name(std::string_view name);

/// 32x32 RGB, pixel-interleaved row-major (R,G,B,R,G,B,...).
struct ColorEncoding {
  std::array<std::uint8_t, 3 * kImagePixels> pixels{};
  Representation representation = Representation::Daily;
  std::string user;
  Date date;
  /// What each of R, G, B was built from.
  std::array<std::string, 3> provenance;

  std::uint8_t at(int pixel, int channel) const { return pixels[static_cast<std::size_t>(3 * pixel + channel)]; }
  std::uint8_t& at(int pixel, int channel) { return pixels[static_cast<std::size_t>(3 * pixel + channel)]; }
  GreyPixels channel(int c) const;
};

/// Scales hidden activations by the frozen per-unit range, clips to [0,1],
/// multiplies by 255 and rounds. Units with zero range become 0.
GreyPixels grey_pixels(const SaeModel& model, const Eigen::VectorXd& hidden);
GreyscaleEncoding encode_grey(const SaeModel& model, const features::FeatureVector& x, std::string user = {},
                              Date date = {});

/// Batch version: row i of the result is the pixel vector of row i of `data`.
std::vector<GreyPixels> encode_grey_batch(const SaeModel& model, const Eigen::MatrixXd& data);

ColorEncoding compose(Representation rep, const GreyscaleEncoding& current, const GreyscaleEncoding& ctx1,
                      const GreyscaleEncoding& ctx2);

/// Exchanges the two context channels.
ColorEncoding augment_swap(const ColorEncoding& img);

/// Replaces both context channels with draws from the user's benign pool
/// (without replacement when the pool has two or more entries).
ColorEncoding augment_replace(const ColorEncoding& img, std::span<const GreyPixels> benign_pool, std::mt19937_64& rng);

// ---------------------------------------------------------------------------
// Dataset composition

/// One composed image plus the labels that go with it.
struct EncodedDay {
  ColorEncoding image;
  /// Label of the evaluation day (R channel).
  features::Label label = features::Label::Benign;
  /// True when any contributing day of any channel is malicious.
  bool any_channel_malicious = false;
};

/// Each evaluation day with its two context feature vectors. Contexts are
/// built from already-extracted feature rows; rows are identified by index
/// into the input vector.
struct ContextPlan {
  std::size_t current;
  std::vector<std::size_t> ctx1;
  std::vector<std::size_t> ctx2;
  std::array<std::string, 3> provenance;
};

/// Daily: ctx1 = the user's previous observed day, ctx2 = the one before.
/// Historical: ctx1 = mean over all earlier days, ctx2 = mean over the
/// trailing seven earlier days. Role: ctx1 = same-role colleagues that day,
/// ctx2 = teammates that day (the user is excluded from both).
/// Days without the required context are skipped.
std::vector<ContextPlan> plan_contexts(Representation rep, const std::vector<features::LabeledDay>& days,
                                       const std::vector<ingest::LdapRecord>& ldap = {});

/// Encodes every planned day. Context channels encode the mean feature vector
/// of the contributing rows.
std::vector<EncodedDay> compose_dataset(const SaeModel& model, Representation rep,
                                        const std::vector<features::LabeledDay>& days,
                                        const std::vector<ingest::LdapRecord>& ldap = {});

/// Stacks feature vectors as matrix rows.
Eigen::MatrixXd feature_matrix(const std::vector<features::LabeledDay>& days);

}  // namespace chromabehave::encoder
