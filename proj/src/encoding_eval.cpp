#include "chromabehave/encoding_eval.hpp"

#include <png.h>

#include <array>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "io_util.hpp"

namespace chromabehave::eval {

using encoder::ColorEncoding;
using encoder::kImagePixels;
using encoder::kImageSide;

namespace {

double colorfulness_impl(std::span<const std::uint8_t> rgb, int* sparse_out) {
  if (rgb.empty() || rgb.size() % 3 != 0) fail(ErrorCode::ShapeMismatch, "RGB buffer size must be a positive multiple of 3");
  const std::size_t n = rgb.size() / 3;
  std::array<double, 3> mean{0, 0, 0};
  for (std::size_t p = 0; p < n; ++p)
    for (int c = 0; c < 3; ++c) mean[static_cast<std::size_t>(c)] += rgb[3 * p + static_cast<std::size_t>(c)];
  for (auto& m : mean) m /= static_cast<double>(n);

  // Two passes over opponent values for numerically stable population variance.
  std::vector<double> rg(n), yb(n);
  int sparse = 0;
  for (std::size_t p = 0; p < n; ++p) {
    double r = rgb[3 * p], g = rgb[3 * p + 1], b = rgb[3 * p + 2];
    if (r <= kSparseThreshold && g <= kSparseThreshold && b <= kSparseThreshold) {
      r = mean[0];
      g = mean[1];
      b = mean[2];
      ++sparse;
    }
    rg[p] = r - g;
    yb[p] = 0.5 * (r + g) - b;
  }
  if (sparse_out) *sparse_out = sparse;
  double mrg = 0, myb = 0;
  for (std::size_t p = 0; p < n; ++p) {
    mrg += rg[p];
    myb += yb[p];
  }
  mrg /= static_cast<double>(n);
  myb /= static_cast<double>(n);
  double vrg = 0, vyb = 0;
  for (std::size_t p = 0; p < n; ++p) {
    vrg += (rg[p] - mrg) * (rg[p] - mrg);
    vyb += (yb[p] - myb) * (yb[p] - myb);
  }
  vrg /= static_cast<double>(n);
  vyb /= static_cast<double>(n);
  return std::sqrt(vrg + vyb) + 0.3 * std::sqrt(mrg * mrg + myb * myb);
}

}  // namespace

double colorfulness_rgb(std::span<const std::uint8_t> rgb) { return colorfulness_impl(rgb, nullptr); }

ColorfulnessReport colorfulness_report(const ColorEncoding& img) {
  ColorfulnessReport r;
  r.representation = img.representation;
  r.colorfulness = colorfulness_impl(img.pixels, &r.sparse_pixels);
  return r;
}

double colorfulness(const ColorEncoding& img) { return colorfulness_impl(img.pixels, nullptr); }

double point_biserial(std::span<const double> values, std::span<const int> labels) {
  if (values.size() != labels.size()) fail(ErrorCode::LengthMismatch, "values and labels differ in length");
  const std::size_t n = values.size();
  double m1 = 0, m0 = 0, mean = 0;
  std::size_t n1 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mean += values[i];
    if (labels[i]) {
      m1 += values[i];
      ++n1;
    } else {
      m0 += values[i];
    }
  }
  if (n1 == 0 || n1 == n) fail(ErrorCode::SingleClass, "point-biserial needs both classes");
  const std::size_t n0 = n - n1;
  m1 /= static_cast<double>(n1);
  m0 /= static_cast<double>(n0);
  mean /= static_cast<double>(n);
  double var = 0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= static_cast<double>(n);
  const double sd = std::sqrt(var);
  if (!(sd > 0)) fail(ErrorCode::SingleValue, "point-biserial undefined for constant values");
  const double p = static_cast<double>(n1) / static_cast<double>(n);
  return (m1 - m0) / sd * std::sqrt(p * (1.0 - p));
}

CorrelationStudy correlation_study(const std::vector<encoder::EncodedDay>& dataset) {
  CorrelationStudy s;
  s.colorfulness.reserve(dataset.size());
  s.labels.reserve(dataset.size());
  for (const auto& e : dataset) {
    s.colorfulness.push_back(colorfulness(e.image));
    s.labels.push_back(e.any_channel_malicious ? 1 : 0);
  }
  s.r = point_biserial(s.colorfulness, s.labels);
  return s;
}

// ---------------------------------------------------------------------------
// PNG via libpng with in-memory callbacks. libpng reports errors by longjmp,
// so the setjmp frames below hold no objects with destructors.

namespace {

struct WriteBuf {
  std::vector<std::uint8_t>* out;
};

void write_cb(png_structp png, png_bytep data, png_size_t len) {
  auto* buf = static_cast<WriteBuf*>(png_get_io_ptr(png));
  buf->out->insert(buf->out->end(), data, data + len);
}

void flush_cb(png_structp) {}

struct ReadBuf {
  const std::uint8_t* data;
  std::size_t size;
  std::size_t pos;
};

void read_cb(png_structp png, png_bytep out, png_size_t len) {
  auto* buf = static_cast<ReadBuf*>(png_get_io_ptr(png));
  if (buf->pos + len > buf->size) png_error(png, "unexpected end of PNG data");
  std::memcpy(out, buf->data + buf->pos, len);
  buf->pos += len;
}

void quiet_warning(png_structp, png_const_charp) {}
// Errors surface as CorruptFile; libpng's default handler would also print to stderr.
[[noreturn]] void quiet_error(png_structp png, png_const_charp) { png_longjmp(png, 1); }

// Returns false on libpng error.
bool png_encode(const std::uint8_t* pixels, int width, int height, int channels, std::vector<std::uint8_t>* out,
                png_bytep* rows) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, quiet_error, quiet_warning);
  if (!png) return false;
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    return false;
  }
  WriteBuf buf{out};
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    return false;
  }
  png_set_write_fn(png, &buf, write_cb, flush_cb);
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8,
               channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  for (int y = 0; y < height; ++y) rows[y] = const_cast<png_bytep>(pixels + static_cast<std::size_t>(y * width * channels));
  png_set_rows(png, info, rows);
  png_write_png(png, info, PNG_TRANSFORM_IDENTITY, nullptr);
  png_destroy_write_struct(&png, &info);
  return true;
}

struct DecodeState {
  int width = 0, height = 0, channels = 0;
  std::vector<std::uint8_t>* pixels = nullptr;
  const char* error = nullptr;
};

bool png_decode(const std::uint8_t* data, std::size_t size, DecodeState* st) {
  if (size < 8 || png_sig_cmp(data, 0, 8) != 0) {
    st->error = "missing PNG signature";
    return false;
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, quiet_error, quiet_warning);
  if (!png) return false;
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    return false;
  }
  ReadBuf buf{data, size, 0};
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    if (!st->error) st->error = "libpng failed to decode the stream";
    return false;
  }
  png_set_read_fn(png, &buf, read_cb);
  png_read_info(png, info);
  const png_uint_32 w = png_get_image_width(png, info);
  const png_uint_32 h = png_get_image_height(png, info);
  const int depth = png_get_bit_depth(png, info);
  const int type = png_get_color_type(png, info);
  if (depth != 8 || (type != PNG_COLOR_TYPE_RGB && type != PNG_COLOR_TYPE_GRAY) ||
      png_get_interlace_type(png, info) != PNG_INTERLACE_NONE || w == 0 || h == 0 || w > 16384 || h > 16384) {
    st->error = "only non-interlaced 8-bit grey or RGB PNGs are supported";
    png_destroy_read_struct(&png, &info, nullptr);
    return false;
  }
  st->width = static_cast<int>(w);
  st->height = static_cast<int>(h);
  st->channels = type == PNG_COLOR_TYPE_RGB ? 3 : 1;
  const std::size_t stride = static_cast<std::size_t>(st->width) * static_cast<std::size_t>(st->channels);
  st->pixels->assign(stride * h, 0);
  for (png_uint_32 y = 0; y < h; ++y) png_read_row(png, st->pixels->data() + stride * y, nullptr);
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return true;
}

}  // namespace

std::vector<std::uint8_t> write_png(std::span<const std::uint8_t> pixels, int width, int height, int channels) {
  if (width <= 0 || height <= 0 || (channels != 1 && channels != 3) ||
      pixels.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * static_cast<std::size_t>(channels)) {
    fail(ErrorCode::ShapeMismatch, "pixel buffer does not match PNG dimensions");
  }
  std::vector<std::uint8_t> out;
  std::vector<png_bytep> rows(static_cast<std::size_t>(height));
  if (!png_encode(pixels.data(), width, height, channels, &out, rows.data())) fail(ErrorCode::Io, "PNG encoding failed");
  return out;
}

std::vector<std::uint8_t> write_png(const ColorEncoding& img) { return write_png(img.pixels, kImageSide, kImageSide, 3); }

std::vector<std::uint8_t> write_png(const encoder::GreyPixels& img) { return write_png(img, kImageSide, kImageSide, 1); }

DecodedPng read_png(std::span<const std::uint8_t> bytes) {
  DecodedPng out;
  DecodeState st;
  st.pixels = &out.pixels;
  if (!png_decode(bytes.data(), bytes.size(), &st)) {
    fail(ErrorCode::CorruptFile, st.error ? st.error : "cannot decode PNG");
  }
  out.width = st.width;
  out.height = st.height;
  out.channels = st.channels;
  return out;
}

ColorEncoding read_color_png(std::span<const std::uint8_t> bytes) {
  const auto d = read_png(bytes);
  if (d.width != kImageSide || d.height != kImageSide || d.channels != 3) {
    fail(ErrorCode::ShapeMismatch, "expected a 32x32 RGB PNG");
  }
  ColorEncoding img;
  std::copy(d.pixels.begin(), d.pixels.end(), img.pixels.begin());
  return img;
}

encoder::GreyPixels read_grey_png(std::span<const std::uint8_t> bytes) {
  const auto d = read_png(bytes);
  if (d.width != kImageSide || d.height != kImageSide || d.channels != 1) {
    fail(ErrorCode::ShapeMismatch, "expected a 32x32 greyscale PNG");
  }
  encoder::GreyPixels px{};
  std::copy(d.pixels.begin(), d.pixels.end(), px.begin());
  return px;
}

// ---------------------------------------------------------------------------

namespace fs = std::filesystem;

void save_image_dataset(const fs::path& dir, const std::vector<encoder::EncodedDay>& data) {
  fs::create_directories(dir / "images");
  std::ofstream manifest(dir / "manifest.jsonl", std::ios::binary | std::ios::trunc);
  if (!manifest) fail(ErrorCode::Io, "cannot write " + (dir / "manifest.jsonl").string());
  char name[32];
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& e = data[i];
    std::snprintf(name, sizeof name, "%06zu.png", i);
    const auto png = write_png(e.image);
    detail::write_file(dir / "images" / name,
                       std::string_view(reinterpret_cast<const char*>(png.data()), png.size()));
    detail::json j;
    j["file"] = std::string("images/") + name;
    j["user"] = e.image.user;
    j["date"] = e.image.date.iso();
    j["representation"] = encoder::representation_name(e.image.representation);
    j["provenance"] = e.image.provenance;
    j["label"] = features::label_name(e.label);
    j["any_channel_malicious"] = e.any_channel_malicious;
    manifest << j.dump() << '\n';
  }
  if (!manifest) fail(ErrorCode::Io, "cannot write image manifest");
}

std::vector<encoder::EncodedDay> load_image_dataset(const fs::path& dir) {
  std::ifstream manifest(dir / "manifest.jsonl", std::ios::binary);
  if (!manifest) fail(ErrorCode::Io, "cannot open " + (dir / "manifest.jsonl").string());
  std::vector<encoder::EncodedDay> out;
  std::string line;
  while (std::getline(manifest, line)) {
    if (trim(line).empty()) continue;
    const auto j = detail::parse_json(line, "image manifest");
    encoder::EncodedDay e;
    try {
      const auto bytes = detail::read_file(dir / j.at("file").get<std::string>());
      e.image = read_color_png(std::span(reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()));
      e.image.user = j.at("user").get<std::string>();
      e.image.date = Date::parse_iso(j.at("date").get<std::string>());
      e.image.representation = encoder::representation_from_name(j.at("representation").get<std::string>());
      e.image.provenance = j.at("provenance").get<std::array<std::string, 3>>();
      e.label = features::label_from_name(j.at("label").get<std::string>());
      e.any_channel_malicious = j.at("any_channel_malicious").get<bool>();
    } catch (const detail::json::exception& ex) {
      fail(ErrorCode::CorruptFile, std::string("image manifest: ") + ex.what());
    }
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace chromabehave::eval
