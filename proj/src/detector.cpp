#include "chromabehave/detector.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <mutex>
#include <set>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "io_util.hpp"

namespace chromabehave::detector {

using detail::json;
using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using encoder::kImagePixels;
using encoder::kImageSide;

// ---------------------------------------------------------------------------
// Non-dynamic features

std::vector<std::string> role_vocabulary(const std::vector<ingest::LdapRecord>& ldap) {
  std::set<std::string> roles;
  for (const auto& r : ldap) roles.insert(r.role);
  return {roles.begin(), roles.end()};
}

NonDynamicFeatures non_dynamic(const std::vector<std::string>& roles, const ingest::LdapRecord& record) {
  NonDynamicFeatures nd;
  nd.values = VectorXd::Zero(static_cast<Index>(roles.size()) + kOceanDims);
  auto it = std::lower_bound(roles.begin(), roles.end(), record.role);
  if (it != roles.end() && *it == record.role) nd.values(it - roles.begin()) = 1.0;
  for (int k = 0; k < kOceanDims; ++k) nd.values(static_cast<Index>(roles.size()) + k) = record.ocean[static_cast<std::size_t>(k)];
  return nd;
}

// ---------------------------------------------------------------------------
// Parameters

CnnParams CnnParams::init(int in_channels, int conv1, int conv2, int dense, int nd_dim, std::uint64_t seed) {
  if (in_channels < 1 || conv1 < 1 || conv2 < 1 || dense < 1 || nd_dim < 0) {
    fail(ErrorCode::InvalidArgument, "detector layer sizes must be positive");
  }
  std::mt19937_64 rng(seed);
  auto fill = [&rng](MatrixXd& m, Index rows, Index cols, double stddev) {
    std::normal_distribution<double> dist(0.0, stddev);
    m.resize(rows, cols);
    for (Index c = 0; c < cols; ++c)
      for (Index r = 0; r < rows; ++r) m(r, c) = dist(rng);
  };
  CnnParams p;
  fill(p.w1, conv1, in_channels * 9, std::sqrt(2.0 / (in_channels * 9)));
  p.b1 = VectorXd::Zero(conv1);
  fill(p.w2, conv2, conv1 * 9, std::sqrt(2.0 / (conv1 * 9)));
  p.b2 = VectorXd::Zero(conv2);
  fill(p.w3, dense, conv2 + nd_dim, std::sqrt(2.0 / (conv2 + nd_dim)));
  p.b3 = VectorXd::Zero(dense);
  fill(p.w4, 1, dense, std::sqrt(1.0 / dense));
  p.b4 = VectorXd::Zero(1);
  return p;
}

namespace {
template <class M>
auto flat_map(M& m) {
  using Map = std::conditional_t<std::is_const_v<M>, Eigen::Map<const VectorXd>, Eigen::Map<VectorXd>>;
  return Map(m.data(), m.size());
}
}  // namespace

std::array<Eigen::Map<VectorXd>, 8> CnnParams::flat() {
  return {flat_map(w1), flat_map(b1), flat_map(w2), flat_map(b2), flat_map(w3), flat_map(b3), flat_map(w4), flat_map(b4)};
}

std::array<Eigen::Map<const VectorXd>, 8> CnnParams::flat() const {
  return {flat_map(w1), flat_map(b1), flat_map(w2), flat_map(b2), flat_map(w3), flat_map(b3), flat_map(w4), flat_map(b4)};
}

CnnParams CnnParams::zeros_like(const CnnParams& o) {
  CnnParams p;
  p.w1 = MatrixXd::Zero(o.w1.rows(), o.w1.cols());
  p.b1 = VectorXd::Zero(o.b1.size());
  p.w2 = MatrixXd::Zero(o.w2.rows(), o.w2.cols());
  p.b2 = VectorXd::Zero(o.b2.size());
  p.w3 = MatrixXd::Zero(o.w3.rows(), o.w3.cols());
  p.b3 = VectorXd::Zero(o.b3.size());
  p.w4 = MatrixXd::Zero(o.w4.rows(), o.w4.cols());
  p.b4 = VectorXd::Zero(o.b4.size());
  return p;
}

// ---------------------------------------------------------------------------
// Forward / backward

namespace {

// 3x3 'same' patches: row = c*9 + ky*3 + kx, column = output position.
MatrixXd im2col(const MatrixXd& in, int n, int h, int w) {
  const Index c_in = in.rows();
  const Index hw = static_cast<Index>(h) * w;
  MatrixXd out = MatrixXd::Zero(c_in * 9, n * hw);
  for (int b = 0; b < n; ++b) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const Index col = b * hw + static_cast<Index>(y) * w + x;
        for (int ky = 0; ky < 3; ++ky) {
          const int sy = y + ky - 1;
          if (sy < 0 || sy >= h) continue;
          for (int kx = 0; kx < 3; ++kx) {
            const int sx = x + kx - 1;
            if (sx < 0 || sx >= w) continue;
            const Index src = b * hw + static_cast<Index>(sy) * w + sx;
            const int k = ky * 3 + kx;
            for (Index c = 0; c < c_in; ++c) out(c * 9 + k, col) = in(c, src);
          }
        }
      }
    }
  }
  return out;
}

MatrixXd col2im(const MatrixXd& cols, Index c_in, int n, int h, int w) {
  const Index hw = static_cast<Index>(h) * w;
  MatrixXd out = MatrixXd::Zero(c_in, n * hw);
  for (int b = 0; b < n; ++b) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const Index col = b * hw + static_cast<Index>(y) * w + x;
        for (int ky = 0; ky < 3; ++ky) {
          const int sy = y + ky - 1;
          if (sy < 0 || sy >= h) continue;
          for (int kx = 0; kx < 3; ++kx) {
            const int sx = x + kx - 1;
            if (sx < 0 || sx >= w) continue;
            const Index dst = b * hw + static_cast<Index>(sy) * w + sx;
            const int k = ky * 3 + kx;
            for (Index c = 0; c < c_in; ++c) out(c, dst) += cols(c * 9 + k, col);
          }
        }
      }
    }
  }
  return out;
}

struct Cache {
  int n = 0, h = 0, w = 0, h2 = 0, w2 = 0;
  MatrixXd col1, a1, p1, col2, a2, f, h3;
  Eigen::Matrix<Index, Eigen::Dynamic, Eigen::Dynamic> arg;
  VectorXd z;
};

void forward(const CnnParams& p, const Batch& batch, Cache& c) {
  if (batch.x.rows() != p.in_channels() || batch.x.cols() != static_cast<Index>(batch.n) * batch.height * batch.width) {
    fail(ErrorCode::ShapeMismatch, "image batch does not match the model input");
  }
  if (batch.nd.rows() != p.nd_dim() || batch.nd.cols() != batch.n) {
    fail(ErrorCode::ShapeMismatch, "non-dynamic features do not match the model");
  }
  if (batch.height < 2 || batch.width < 2) fail(ErrorCode::ShapeMismatch, "images must be at least 2x2");
  c.n = batch.n;
  c.h = batch.height;
  c.w = batch.width;
  c.h2 = c.h / 2;
  c.w2 = c.w / 2;
  const Index hw = static_cast<Index>(c.h) * c.w;
  const Index hw2 = static_cast<Index>(c.h2) * c.w2;

  c.col1 = im2col(batch.x, c.n, c.h, c.w);
  c.a1 = p.w1 * c.col1;
  c.a1.colwise() += p.b1;
  c.a1 = c.a1.cwiseMax(0.0);

  const Index c1 = p.w1.rows();
  c.p1.resize(c1, c.n * hw2);
  c.arg.resize(c1, c.n * hw2);
  for (int b = 0; b < c.n; ++b) {
    for (int oy = 0; oy < c.h2; ++oy) {
      for (int ox = 0; ox < c.w2; ++ox) {
        const Index col = b * hw2 + static_cast<Index>(oy) * c.w2 + ox;
        const Index base = b * hw + static_cast<Index>(2 * oy) * c.w + 2 * ox;
        const Index cand[4] = {base, base + 1, base + c.w, base + c.w + 1};
        for (Index ch = 0; ch < c1; ++ch) {
          Index best = cand[0];
          for (int k = 1; k < 4; ++k)
            if (c.a1(ch, cand[k]) > c.a1(ch, best)) best = cand[k];
          c.p1(ch, col) = c.a1(ch, best);
          c.arg(ch, col) = best;
        }
      }
    }
  }

  c.col2 = im2col(c.p1, c.n, c.h2, c.w2);
  c.a2 = p.w2 * c.col2;
  c.a2.colwise() += p.b2;
  c.a2 = c.a2.cwiseMax(0.0);

  const Index c2 = p.w2.rows();
  c.f.resize(c2 + p.nd_dim(), c.n);
  for (int b = 0; b < c.n; ++b) {
    c.f.col(b).head(c2) = c.a2.middleCols(b * hw2, hw2).rowwise().mean();
    c.f.col(b).tail(p.nd_dim()) = batch.nd.col(b);
  }
  c.h3 = p.w3 * c.f;
  c.h3.colwise() += p.b3;
  c.h3 = c.h3.cwiseMax(0.0);
  c.z = (p.w4 * c.h3).transpose();
  c.z.array() += p.b4(0);
}

// Backpropagates dL/dz; fills grad and/or dx when non-null.
void backward(const CnnParams& p, const Batch& batch, const Cache& c, const VectorXd& dz, CnnParams* grad,
              MatrixXd* dx) {
  const Index hw2 = static_cast<Index>(c.h2) * c.w2;
  const Index c2 = p.w2.rows();
  const Eigen::RowVectorXd dzr = dz.transpose();
  MatrixXd dh3 = p.w4.transpose() * dzr;
  dh3 = dh3.cwiseProduct((c.h3.array() > 0).cast<double>().matrix());
  const MatrixXd df = p.w3.transpose() * dh3;

  MatrixXd da2(c2, c.n * hw2);
  for (int b = 0; b < c.n; ++b) {
    da2.middleCols(b * hw2, hw2) = (df.col(b).head(c2) / static_cast<double>(hw2)).replicate(1, hw2);
  }
  da2 = da2.cwiseProduct((c.a2.array() > 0).cast<double>().matrix());
  const MatrixXd dp1 = col2im(p.w2.transpose() * da2, p.w1.rows(), c.n, c.h2, c.w2);

  MatrixXd da1 = MatrixXd::Zero(c.a1.rows(), c.a1.cols());
  for (Index col = 0; col < dp1.cols(); ++col)
    for (Index ch = 0; ch < dp1.rows(); ++ch) da1(ch, c.arg(ch, col)) += dp1(ch, col);
  da1 = da1.cwiseProduct((c.a1.array() > 0).cast<double>().matrix());

  if (grad) {
    grad->w4 = dzr * c.h3.transpose();
    grad->b4 = VectorXd::Constant(1, dz.sum());
    grad->w3 = dh3 * c.f.transpose();
    grad->b3 = dh3.rowwise().sum();
    grad->w2 = da2 * c.col2.transpose();
    grad->b2 = da2.rowwise().sum();
    grad->w1 = da1 * c.col1.transpose();
    grad->b1 = da1.rowwise().sum();
  }
  if (dx) *dx = col2im(p.w1.transpose() * da1, batch.x.rows(), c.n, c.h, c.w);
}

double sigmoid(double z) { return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z)); }
double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

}  // namespace

VectorXd forward_logits(const CnnParams& p, const Batch& batch) {
  Cache c;
  forward(p, batch, c);
  return c.z;
}

double loss_and_gradient(const CnnParams& p, const Batch& batch, CnnParams* grad) {
  if (batch.n < 1) fail(ErrorCode::InvalidArgument, "empty batch");
  Cache c;
  forward(p, batch, c);
  double loss = 0;
  VectorXd dz(batch.n);
  for (int i = 0; i < batch.n; ++i) {
    const double z = c.z(i), y = batch.y(i);
    loss += softplus(z) - y * z;
    dz(i) = (sigmoid(z) - y) / batch.n;
  }
  loss /= batch.n;
  if (grad) backward(p, batch, c, dz, grad, nullptr);
  return loss;
}

MatrixXd logit_input_gradient(const CnnParams& p, const Batch& batch, const VectorXd& w) {
  Cache c;
  forward(p, batch, c);
  MatrixXd dx;
  backward(p, batch, c, w, nullptr, &dx);
  return dx;
}

// ---------------------------------------------------------------------------
// Batches and augmentation

Batch make_batch(std::span<const Sample> samples, std::span<const std::size_t> index) {
  Batch b;
  b.n = static_cast<int>(index.size());
  b.height = kImageSide;
  b.width = kImageSide;
  const Index nd = index.empty() ? 0 : samples[index[0]].nd.size();
  b.x.resize(3, static_cast<Index>(b.n) * kImagePixels);
  b.nd.resize(nd, b.n);
  b.y.resize(b.n);
  for (int i = 0; i < b.n; ++i) {
    const Sample& s = samples[index[static_cast<std::size_t>(i)]];
    if (s.nd.size() != nd) fail(ErrorCode::ShapeMismatch, "non-dynamic feature width varies within a batch");
    const Index base = static_cast<Index>(i) * kImagePixels;
    for (int px = 0; px < kImagePixels; ++px)
      for (int ch = 0; ch < 3; ++ch) b.x(ch, base + px) = s.image.at(px, ch) / 255.0;
    b.nd.col(i) = s.nd;
    b.y(i) = s.label;
  }
  return b;
}

Batch make_batch(std::span<const Sample> samples) {
  std::vector<std::size_t> idx(samples.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return make_batch(samples, idx);
}

std::vector<Sample> augment_training_set(const std::vector<Sample>& train, const AugmentConfig& cfg,
                                         std::mt19937_64& rng) {
  std::vector<Sample> out = train;
  std::map<std::string, std::vector<encoder::GreyPixels>> pools;
  if (cfg.replace > 0) {
    for (const auto& s : train)
      if (s.label == 0) pools[s.image.user].push_back(s.image.channel(0));
  }
  for (const auto& s : train) {
    if (s.label != 1) continue;
    if (cfg.swap) {
      Sample a = s;
      a.image = encoder::augment_swap(s.image);
      out.push_back(std::move(a));
    }
    auto it = pools.find(s.image.user);
    if (it == pools.end() || it->second.empty()) continue;
    for (int k = 0; k < cfg.replace; ++k) {
      Sample a = s;
      a.image = encoder::augment_replace(s.image, it->second, rng);
      out.push_back(std::move(a));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Metrics

Metrics Metrics::from_counts(std::size_t tp, std::size_t fp, std::size_t tn, std::size_t fn) {
  Metrics m;
  m.tp = tp;
  m.fp = fp;
  m.tn = tn;
  m.fn = fn;
  const double dtp = static_cast<double>(tp), dfp = static_cast<double>(fp);
  const double dtn = static_cast<double>(tn), dfn = static_cast<double>(fn);
  const double tpr = tp + fn ? dtp / (dtp + dfn) : 0.0;
  const double tnr = tn + fp ? dtn / (dtn + dfp) : 0.0;
  m.balanced_accuracy = (tpr + tnr) / 2.0;
  m.precision = tp + fp ? dtp / (dtp + dfp) : 0.0;
  m.recall = tpr;
  m.f1 = m.precision + m.recall > 0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
  return m;
}

Metrics metrics_from_scores(std::span<const double> probs, std::span<const int> labels, double threshold) {
  if (probs.size() != labels.size()) fail(ErrorCode::LengthMismatch, "scores and labels differ in length");
  if (probs.empty()) fail(ErrorCode::EmptyTestSet, "no samples to evaluate");
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const bool pos = probs[i] >= threshold;
    if (labels[i]) {
      pos ? ++tp : ++fn;
    } else {
      pos ? ++fp : ++tn;
    }
  }
  return Metrics::from_counts(tp, fp, tn, fn);
}

// ---------------------------------------------------------------------------
// Training

namespace {

constexpr std::size_t kPredictChunk = 256;

std::vector<double> logits_of(const CnnParams& p, std::span<const Sample> samples) {
  std::vector<double> out;
  out.reserve(samples.size());
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < samples.size(); start += kPredictChunk) {
    const std::size_t n = std::min(kPredictChunk, samples.size() - start);
    idx.resize(n);
    std::iota(idx.begin(), idx.end(), start);
    const VectorXd z = forward_logits(p, make_batch(samples, idx));
    out.insert(out.end(), z.data(), z.data() + z.size());
  }
  return out;
}

struct Adam {
  double lr, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  long t = 0;
  CnnParams m, v;

  void step(CnnParams& p, const CnnParams& g) {
    ++t;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(t));
    auto pp = p.flat();
    auto gg = g.flat();
    auto mm = m.flat();
    auto vv = v.flat();
    for (std::size_t k = 0; k < pp.size(); ++k) {
      mm[k] = b1 * mm[k] + (1.0 - b1) * gg[k];
      vv[k] = b2 * vv[k] + (1.0 - b2) * gg[k].cwiseAbs2();
      pp[k].array() -= lr * (mm[k].array() / bc1) / ((vv[k].array() / bc2).sqrt() + eps);
    }
  }
};

// Batch-sized im2col buffers (tens of MB) would otherwise be mmapped and
// returned to the kernel on every step; page faulting them back costs more
// than the convolutions.
void keep_large_blocks() {
#if defined(__GLIBC__)
  static std::once_flag once;
  std::call_once(once, [] {
    mallopt(M_MMAP_THRESHOLD, 1 << 30);
    mallopt(M_TRIM_THRESHOLD, 1 << 30);
  });
#endif
}

void check_both_classes(const std::vector<Sample>& train) {
  bool pos = false, neg = false;
  for (const auto& s : train) (s.label ? pos : neg) = true;
  if (!pos || !neg) fail(ErrorCode::SingleClassTrainingSet, "training set must contain both classes");
}

DetectionModel run_training(DetectionModel model, const std::vector<Sample>& train, const std::vector<Sample>& val,
                            double lr, int epochs, std::uint64_t seed, TrainReport* report) {
  check_both_classes(train);
  keep_large_blocks();
  TrainReport local;
  TrainReport& rep = report ? *report : local;
  rep = {};
  rep.train_size = train.size();

  Adam opt{lr, 0.9, 0.999, 1e-8, 0, {}, {}};
  opt.m = CnnParams::zeros_like(model.params);
  opt.v = CnnParams::zeros_like(model.params);
  std::mt19937_64 rng(seed ^ 0xdec0de5eedULL);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto batch_size = static_cast<std::size_t>(std::max(1, model.config.batch));

  std::vector<int> val_labels;
  for (const auto& s : val) val_labels.push_back(s.label);

  DetectionModel best = model;
  double best_f1 = -1, best_loss = std::numeric_limits<double>::infinity();
  CnnParams g;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double sum = 0;
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
      const std::size_t n = std::min(batch_size, order.size() - start);
      const Batch b = make_batch(train, std::span(order).subspan(start, n));
      const double l = loss_and_gradient(model.params, b, &g);
      if (!std::isfinite(l)) fail(ErrorCode::DivergedLoss, "detector loss became non-finite");
      sum += l * static_cast<double>(n);
      opt.step(model.params, g);
    }
    rep.train_loss.push_back(sum / static_cast<double>(order.size()));

    if (val.empty()) {
      best = model;
      rep.best_epoch = epoch;
      continue;
    }
    const auto z = logits_of(model.params, val);
    std::vector<double> probs(z.size());
    double vloss = 0;
    for (std::size_t i = 0; i < z.size(); ++i) {
      probs[i] = sigmoid(z[i]);
      vloss += softplus(z[i]) - val_labels[i] * z[i];
    }
    vloss /= static_cast<double>(z.size());
    const double f1 = metrics_from_scores(probs, val_labels).f1;
    rep.val_f1.push_back(f1);
    rep.val_loss.push_back(vloss);
    if (f1 > best_f1 || (f1 == best_f1 && vloss < best_loss)) {
      best_f1 = f1;
      best_loss = vloss;
      best = model;
      rep.best_epoch = epoch;
    }
  }
  return best;
}

VectorXd mean_nd(const std::vector<Sample>& train, Index dim) {
  VectorXd m = VectorXd::Zero(dim);
  for (const auto& s : train) m += s.nd;
  if (!train.empty()) m /= static_cast<double>(train.size());
  return m;
}

}  // namespace

DetectionModel train_classifier(const std::vector<Sample>& train, const std::vector<Sample>& val,
                                const std::vector<std::string>& roles, const DetectorConfig& cfg,
                                TrainReport* report) {
  check_both_classes(train);
  const int nd_dim = static_cast<int>(roles.size()) + kOceanDims;
  for (const auto& s : train)
    if (s.nd.size() != nd_dim) fail(ErrorCode::ShapeMismatch, "non-dynamic width does not match the role vocabulary");
  DetectionModel model;
  model.roles = roles;
  model.config = cfg;
  model.params = CnnParams::init(3, cfg.conv1, cfg.conv2, cfg.dense, nd_dim, cfg.seed);
  model.nd_mean = mean_nd(train, nd_dim);
  std::mt19937_64 rng(cfg.seed ^ 0xa06u);
  const bool augment = cfg.augment.swap || cfg.augment.replace > 0;
  const auto data = augment ? augment_training_set(train, cfg.augment, rng) : train;
  return run_training(std::move(model), data, val, cfg.lr, cfg.epochs, cfg.seed, report);
}

DetectionModel fine_tune(const DetectionModel& base, const std::vector<Sample>& train, const std::vector<Sample>& val,
                         double lr, int epochs, TrainReport* report) {
  std::mt19937_64 rng(base.config.seed ^ 0xf1e7u);
  const bool augment = base.config.augment.swap || base.config.augment.replace > 0;
  const auto data = augment ? augment_training_set(train, base.config.augment, rng) : train;
  return run_training(base, data, val, lr, epochs, base.config.seed + 1, report);
}

double predict(const DetectionModel& model, const encoder::ColorEncoding& img, const NonDynamicFeatures& nd) {
  Sample s{img, nd.values, 0, features::Label::Benign};
  return sigmoid(logits_of(model.params, std::span(&s, 1)).front());
}

std::vector<double> predict_batch(const DetectionModel& model, std::span<const Sample> samples) {
  keep_large_blocks();
  auto z = logits_of(model.params, samples);
  for (auto& v : z) v = sigmoid(v);
  return z;
}

Metrics evaluate(const DetectionModel& model, std::span<const Sample> test) {
  if (test.empty()) fail(ErrorCode::EmptyTestSet, "no samples to evaluate");
  const auto probs = predict_batch(model, test);
  std::vector<int> labels;
  labels.reserve(test.size());
  for (const auto& s : test) labels.push_back(s.label);
  return metrics_from_scores(probs, labels);
}

// ---------------------------------------------------------------------------
// Activation maximization

encoder::ColorEncoding ActMaxResult::rounded() const {
  encoder::ColorEncoding img;
  for (std::size_t i = 0; i < img.pixels.size() && i < pixels.size(); ++i) {
    img.pixels[i] = static_cast<std::uint8_t>(std::lround(std::clamp(pixels[i], 0.0, 255.0)));
  }
  img.provenance = {"activation-maximization", "activation-maximization", "activation-maximization"};
  return img;
}

ActMaxResult activation_maximization(const DetectionModel& model, Target target, const ActMaxConfig& cfg) {
  const Index nd_dim = model.params.nd_dim();
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> noise(0.0, cfg.init_noise);
  ActMaxResult res;
  res.pixels.resize(3 * kImagePixels);
  for (auto& v : res.pixels) v = std::clamp(cfg.init_grey + noise(rng), 0.0, 255.0);

  Batch b;
  b.n = 1;
  b.height = kImageSide;
  b.width = kImageSide;
  b.x.resize(3, kImagePixels);
  b.nd = model.nd_mean.size() == nd_dim ? MatrixXd(model.nd_mean) : MatrixXd::Zero(nd_dim, 1);
  b.y = VectorXd::Zero(1);
  const double sign = target == Target::Malicious ? 1.0 : -1.0;
  auto load = [&] {
    for (int px = 0; px < kImagePixels; ++px)
      for (int ch = 0; ch < 3; ++ch) b.x(ch, px) = res.pixels[static_cast<std::size_t>(3 * px + ch)] / 255.0;
  };
  const VectorXd w = VectorXd::Constant(1, sign);
  for (int step = 0; step < cfg.steps; ++step) {
    load();
    const MatrixXd g = logit_input_gradient(model.params, b, w);
    const double rms = std::sqrt(g.squaredNorm() / static_cast<double>(g.size()));
    if (!(rms > 0)) break;
    for (int px = 0; px < kImagePixels; ++px) {
      for (int ch = 0; ch < 3; ++ch) {
        auto& v = res.pixels[static_cast<std::size_t>(3 * px + ch)];
        v = std::clamp(v + cfg.lr * g(ch, px) / rms, 0.0, 255.0);
      }
    }
  }
  load();
  const double p = sigmoid(forward_logits(model.params, b)(0));
  res.probability = target == Target::Malicious ? p : 1.0 - p;
  return res;
}

// ---------------------------------------------------------------------------
// Serialization

std::string DetectionModel::to_json() const {
  json j;
  j["format"] = "chromabehave.detector";
  j["version"] = 1;
  j["roles"] = roles;
  j["config"] = {{"conv1", config.conv1},
                 {"conv2", config.conv2},
                 {"dense", config.dense},
                 {"lr", config.lr},
                 {"batch", config.batch},
                 {"epochs", config.epochs},
                 {"seed", config.seed},
                 {"augment_swap", config.augment.swap},
                 {"augment_replace", config.augment.replace}};
  j["nd_mean"] = detail::vector_to_json(nd_mean);
  j["w1"] = detail::matrix_to_json(params.w1);
  j["b1"] = detail::vector_to_json(params.b1);
  j["w2"] = detail::matrix_to_json(params.w2);
  j["b2"] = detail::vector_to_json(params.b2);
  j["w3"] = detail::matrix_to_json(params.w3);
  j["b3"] = detail::vector_to_json(params.b3);
  j["w4"] = detail::matrix_to_json(params.w4);
  j["b4"] = detail::vector_to_json(params.b4);
  return j.dump();
}

DetectionModel DetectionModel::from_json(std::string_view text) {
  const json j = detail::parse_json(text, "detector model");
  detail::check_format(j, "chromabehave.detector", 1);
  DetectionModel m;
  try {
    m.roles = j.at("roles").get<std::vector<std::string>>();
    const auto& c = j.at("config");
    m.config.conv1 = c.at("conv1").get<int>();
    m.config.conv2 = c.at("conv2").get<int>();
    m.config.dense = c.at("dense").get<int>();
    m.config.lr = c.at("lr").get<double>();
    m.config.batch = c.at("batch").get<int>();
    m.config.epochs = c.at("epochs").get<int>();
    m.config.seed = c.at("seed").get<std::uint64_t>();
    m.config.augment.swap = c.at("augment_swap").get<bool>();
    m.config.augment.replace = c.at("augment_replace").get<int>();
    m.nd_mean = detail::vector_from_json(j.at("nd_mean"));
    m.params.w1 = detail::matrix_from_json(j.at("w1"));
    m.params.b1 = detail::vector_from_json(j.at("b1"));
    m.params.w2 = detail::matrix_from_json(j.at("w2"));
    m.params.b2 = detail::vector_from_json(j.at("b2"));
    m.params.w3 = detail::matrix_from_json(j.at("w3"));
    m.params.b3 = detail::vector_from_json(j.at("b3"));
    m.params.w4 = detail::matrix_from_json(j.at("w4"));
    m.params.b4 = detail::vector_from_json(j.at("b4"));
  } catch (const json::exception& e) {
    fail(ErrorCode::CorruptFile, std::string("detector model: ") + e.what());
  }
  const auto& p = m.params;
  if (p.w1.cols() % 9 != 0 || p.b1.size() != p.w1.rows() || p.w2.cols() != p.w1.rows() * 9 ||
      p.b2.size() != p.w2.rows() || p.w3.cols() < p.w2.rows() || p.b3.size() != p.w3.rows() ||
      p.w4.rows() != 1 || p.w4.cols() != p.w3.rows() || p.b4.size() != 1 ||
      p.nd_dim() != static_cast<int>(m.roles.size()) + kOceanDims) {
    fail(ErrorCode::CorruptFile, "detector tensor shapes are inconsistent");
  }
  return m;
}

void DetectionModel::save(const std::filesystem::path& path) const { detail::write_file(path, to_json() + "\n"); }
DetectionModel DetectionModel::load(const std::filesystem::path& path) { return from_json(detail::read_file(path)); }

}  // namespace chromabehave::detector
