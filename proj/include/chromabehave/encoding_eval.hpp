#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "chromabehave/encoder.hpp"

namespace chromabehave::eval {

/// Pixels whose three channels are all at or below this value count as sparse.
inline constexpr int kSparseThreshold = 1;

struct ColorfulnessReport {
  double colorfulness = 0;
  int sparse_pixels = 0;
  encoder::Representation representation = encoder::Representation::Daily;
};

/// Opponent-channel colorfulness with sparse pixels first replaced by the
/// per-channel image mean:
///   rg = R - G, yb = (R + G)/2 - B
///   C = sqrt(var(rg) + var(yb)) + 0.3 sqrt(mean(rg)^2 + mean(yb)^2)
/// Variances are population variances.
ColorfulnessReport colorfulness_report(const encoder::ColorEncoding& img);
double colorfulness(const encoder::ColorEncoding& img);
/// Same metric on an interleaved RGB buffer of any size (3 bytes per pixel).
double colorfulness_rgb(std::span<const std::uint8_t> rgb);

/// r = (M1 - M0) / s_n * sqrt(p q) with population standard deviation s_n.
/// Throws LengthMismatch, SingleClass or SingleValue.
double point_biserial(std::span<const double> values, std::span<const int> labels);

struct CorrelationStudy {
  double r = 0;
  std::vector<double> colorfulness;
  std::vector<int> labels;  // any-channel-malicious
};

CorrelationStudy correlation_study(const std::vector<encoder::EncodedDay>& dataset);

// ---------------------------------------------------------------------------
// PNG

std::vector<std::uint8_t> write_png(const encoder::ColorEncoding& img);
std::vector<std::uint8_t> write_png(const encoder::GreyPixels& img);
/// Generic 8-bit writer; channels is 1 (grey) or 3 (RGB).
std::vector<std::uint8_t> write_png(std::span<const std::uint8_t> pixels, int width, int height, int channels);

struct DecodedPng {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<std::uint8_t> pixels;
};

/// Throws CorruptFile on anything that is not a valid 8-bit grey/RGB PNG.
DecodedPng read_png(std::span<const std::uint8_t> bytes);
encoder::ColorEncoding read_color_png(std::span<const std::uint8_t> bytes);
encoder::GreyPixels read_grey_png(std::span<const std::uint8_t> bytes);

// ---------------------------------------------------------------------------
// Image datasets on disk: DIR/images/NNNNNN.png plus DIR/manifest.jsonl with
// one provenance/label record per image, in dataset order.

void save_image_dataset(const std::filesystem::path& dir, const std::vector<encoder::EncodedDay>& data);
std::vector<encoder::EncodedDay> load_image_dataset(const std::filesystem::path& dir);

}  // namespace chromabehave::eval
