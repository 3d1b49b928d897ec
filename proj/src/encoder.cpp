#include "chromabehave/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <unordered_map>

#include "io_util.hpp"

namespace chromabehave::encoder {

using detail::json;
using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr double kSeluLambda = 1.0507009873554804934193349852946;
constexpr double kSeluAlpha = 1.6732632423543772848170429916717;

double selu_grad(double a) { return a > 0 ? kSeluLambda : kSeluLambda * kSeluAlpha * std::exp(a); }
double sigmoid(double a) { return 1.0 / (1.0 + std::exp(-a)); }

MatrixXd standardize(const SaeModel& m, const MatrixXd& x) {
  if (x.cols() != m.inputs()) fail(ErrorCode::DimensionMismatch, "SAE input width mismatch");
  return (x.rowwise() - m.input_mean.transpose()).array().rowwise() / m.input_scale.transpose().array();
}

// Pre-activations of the hidden layer for standardized rows.
MatrixXd preact(const SaeModel& m, const MatrixXd& z) {
  MatrixXd a = z * m.w_enc.transpose();
  a.rowwise() += m.b_enc.transpose();
  return a;
}

}  // namespace

double selu(double a) { return a > 0 ? kSeluLambda * a : kSeluLambda * kSeluAlpha * (std::exp(a) - 1.0); }

double kl_bernoulli(double rho, double rho_hat) {
  return rho * std::log(rho / rho_hat) + (1.0 - rho) * std::log((1.0 - rho) / (1.0 - rho_hat));
}

SaeModel SaeModel::init(int inputs, int hidden, std::uint64_t seed, double rho, double beta) {
  if (inputs <= 0 || hidden <= 0) fail(ErrorCode::InvalidArgument, "SAE dimensions must be positive");
  SaeModel m;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> enc(0.0, std::sqrt(1.0 / inputs));
  std::normal_distribution<double> dec(0.0, std::sqrt(1.0 / hidden));
  m.input_mean = VectorXd::Zero(inputs);
  m.input_scale = VectorXd::Ones(inputs);
  m.w_enc.resize(hidden, inputs);
  for (Index r = 0; r < hidden; ++r)
    for (Index c = 0; c < inputs; ++c) m.w_enc(r, c) = enc(rng);
  m.b_enc = VectorXd::Zero(hidden);
  m.w_dec.resize(inputs, hidden);
  for (Index r = 0; r < inputs; ++r)
    for (Index c = 0; c < hidden; ++c) m.w_dec(r, c) = dec(rng);
  m.b_dec = VectorXd::Zero(inputs);
  m.rho = rho;
  m.beta = beta;
  m.unit_min = VectorXd::Zero(hidden);
  m.unit_max = VectorXd::Zero(hidden);
  return m;
}

SaeOutput sae_forward(const SaeModel& model, const VectorXd& x) {
  if (x.size() != model.inputs()) fail(ErrorCode::DimensionMismatch, "SAE input width mismatch");
  if (!x.allFinite()) fail(ErrorCode::NonFiniteInput, "SAE input contains NaN or Inf");
  const VectorXd z = (x - model.input_mean).cwiseQuotient(model.input_scale);
  SaeOutput out;
  out.hidden = (model.w_enc * z + model.b_enc).unaryExpr([](double a) { return selu(a); });
  out.reconstruction = model.w_dec * out.hidden + model.b_dec;
  return out;
}

namespace {

SaeLoss loss_impl(const SaeModel& model, const MatrixXd& batch, SaeGradient* grad) {
  const Index m = batch.rows();
  if (m < 1) fail(ErrorCode::InvalidArgument, "SAE loss needs at least one row");
  if (!batch.allFinite()) fail(ErrorCode::NonFiniteInput, "SAE batch contains NaN or Inf");
  const Index d = model.inputs();
  const MatrixXd z = standardize(model, batch);
  const MatrixXd a = preact(model, z);
  const MatrixXd h = a.unaryExpr([](double v) { return selu(v); });
  MatrixXd r = h * model.w_dec.transpose();
  r.rowwise() += model.b_dec.transpose();
  const MatrixXd diff = r - z;

  SaeLoss loss;
  loss.recon = diff.squaredNorm() / static_cast<double>(m * d);

  const MatrixXd s = h.unaryExpr([](double v) { return sigmoid(v); });
  const VectorXd rho_hat = s.colwise().mean().transpose();
  VectorXd dkl = VectorXd::Zero(model.hidden());
  for (Index j = 0; j < rho_hat.size(); ++j) {
    const double raw = rho_hat(j);
    const double c = std::clamp(raw, kRhoHatFloor, 1.0 - kRhoHatFloor);
    loss.kl += kl_bernoulli(model.rho, c);
    if (raw > kRhoHatFloor && raw < 1.0 - kRhoHatFloor) dkl(j) = -model.rho / c + (1.0 - model.rho) / (1.0 - c);
  }
  loss.total = loss.recon + model.beta * loss.kl;
  if (!grad) return loss;

  const MatrixXd d_r = diff * (2.0 / static_cast<double>(m * d));
  grad->w_dec = d_r.transpose() * h;
  grad->b_dec = d_r.colwise().sum().transpose();
  MatrixXd d_h = d_r * model.w_dec;
  // Sparsity term: d(beta * KL_j)/d h_ij = beta * KL'_j / m * s_ij (1 - s_ij).
  const VectorXd coef = dkl * (model.beta / static_cast<double>(m));
  d_h.array() += (s.array() * (1.0 - s.array())).rowwise() * coef.transpose().array();
  const MatrixXd d_a = d_h.cwiseProduct(a.unaryExpr([](double v) { return selu_grad(v); }));
  grad->w_enc = d_a.transpose() * z;
  grad->b_enc = d_a.colwise().sum().transpose();
  return loss;
}

// NAdam with a constant momentum coefficient.
struct NadamSlot {
  MatrixXd m, v;
  void init(Index rows, Index cols) {
    m = MatrixXd::Zero(rows, cols);
    v = MatrixXd::Zero(rows, cols);
  }
};

struct Nadam {
  double lr, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  long t = 0;

  template <class P, class G>
  void step(P& param, const G& g, NadamSlot& s) const {
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(t));
    const double bc1_next = 1.0 - std::pow(b1, static_cast<double>(t + 1));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(t));
    auto gm = g.reshaped();
    auto m = s.m.reshaped();
    auto v = s.v.reshaped();
    m = b1 * m + (1.0 - b1) * gm;
    v = b2 * v + (1.0 - b2) * gm.cwiseAbs2();
    auto p = param.reshaped();
    p.array() -= lr * ((b1 / bc1_next) * m.array() + ((1.0 - b1) / bc1) * gm.array()) /
                 ((v.array() / bc2).sqrt() + eps);
  }
};

}  // namespace

SaeLoss sae_loss(const SaeModel& model, const MatrixXd& batch) { return loss_impl(model, batch, nullptr); }

SaeLoss sae_loss_and_gradient(const SaeModel& model, const MatrixXd& batch, SaeGradient& grad) {
  return loss_impl(model, batch, &grad);
}

void freeze_minmax(SaeModel& model, const MatrixXd& data) {
  const Index h = model.hidden();
  model.unit_min = VectorXd::Constant(h, std::numeric_limits<double>::infinity());
  model.unit_max = VectorXd::Constant(h, -std::numeric_limits<double>::infinity());
  constexpr Index kChunk = 4096;
  for (Index start = 0; start < data.rows(); start += kChunk) {
    const Index n = std::min(kChunk, data.rows() - start);
    const MatrixXd act = preact(model, standardize(model, data.middleRows(start, n))).unaryExpr([](double v) {
      return selu(v);
    });
    model.unit_min = model.unit_min.cwiseMin(act.colwise().minCoeff().transpose());
    model.unit_max = model.unit_max.cwiseMax(act.colwise().maxCoeff().transpose());
  }
  if (data.rows() == 0) {
    model.unit_min.setZero();
    model.unit_max.setZero();
  }
}

SaeModel train_sae(const MatrixXd& data, const SaeHyper& hyper, SaeTrainReport* report, int hidden) {
  if (data.rows() < 1) fail(ErrorCode::InvalidArgument, "SAE training needs data");
  if (hyper.batch < 1 || hyper.epochs < 0 || !(hyper.lr > 0)) fail(ErrorCode::InvalidArgument, "bad SAE hyperparameters");
  if (!data.allFinite()) fail(ErrorCode::NonFiniteInput, "SAE training data contains NaN or Inf");
  const Index d = data.cols();
  SaeModel model = SaeModel::init(static_cast<int>(d), hidden, hyper.seed, hyper.rho, hyper.beta);
  model.input_mean = data.colwise().mean().transpose();
  const VectorXd centered_sq = (data.rowwise() - model.input_mean.transpose()).colwise().squaredNorm().transpose();
  model.input_scale = (centered_sq / static_cast<double>(data.rows())).cwiseSqrt();
  for (Index j = 0; j < d; ++j) {
    if (!(model.input_scale(j) > 1e-12)) model.input_scale(j) = 1.0;
  }

  SaeTrainReport local;
  SaeTrainReport& rep = report ? *report : local;
  rep = {};
  rep.initial_loss = sae_loss(model, data).total;

  Nadam opt{hyper.lr};
  NadamSlot s_we, s_be, s_wd, s_bd;
  s_we.init(model.w_enc.rows(), model.w_enc.cols());
  s_be.init(model.b_enc.size(), 1);
  s_wd.init(model.w_dec.rows(), model.w_dec.cols());
  s_bd.init(model.b_dec.size(), 1);

  std::mt19937_64 rng(hyper.seed ^ 0x5ae5ae5ae5ae5aeULL);
  std::vector<Index> order(static_cast<std::size_t>(data.rows()));
  std::iota(order.begin(), order.end(), Index{0});
  SaeModel best = model;
  double best_loss = std::numeric_limits<double>::infinity();
  int since_best = 0;
  SaeGradient g;
  MatrixXd batch;
  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double sum = 0;
    Index seen = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(hyper.batch)) {
      const std::size_t n = std::min(order.size() - start, static_cast<std::size_t>(hyper.batch));
      batch.resize(static_cast<Index>(n), d);
      for (std::size_t i = 0; i < n; ++i) batch.row(static_cast<Index>(i)) = data.row(order[start + i]);
      const SaeLoss l = sae_loss_and_gradient(model, batch, g);
      if (!std::isfinite(l.total)) fail(ErrorCode::DivergedLoss, "SAE loss became non-finite");
      sum += l.total * static_cast<double>(n);
      seen += static_cast<Index>(n);
      ++opt.t;
      opt.step(model.w_enc, g.w_enc, s_we);
      opt.step(model.b_enc, g.b_enc, s_be);
      opt.step(model.w_dec, g.w_dec, s_wd);
      opt.step(model.b_dec, g.b_dec, s_bd);
    }
    const double epoch_loss = sum / static_cast<double>(seen);
    rep.epoch_loss.push_back(epoch_loss);
    if (epoch_loss < best_loss) {
      best_loss = epoch_loss;
      best = model;
      rep.best_epoch = epoch;
      since_best = 0;
    } else if (hyper.patience > 0 && ++since_best >= hyper.patience) {
      break;
    }
  }
  if (rep.best_epoch >= 0) model = std::move(best);
  freeze_minmax(model, data);
  return model;
}

// ---------------------------------------------------------------------------
// Serialization

std::string SaeModel::to_json() const {
  json j;
  j["format"] = "chromabehave.sae";
  j["version"] = 1;
  j["inputs"] = inputs();
  j["hidden"] = hidden();
  j["rho"] = rho;
  j["beta"] = beta;
  j["input_mean"] = detail::vector_to_json(input_mean);
  j["input_scale"] = detail::vector_to_json(input_scale);
  j["w_enc"] = detail::matrix_to_json(w_enc);
  j["b_enc"] = detail::vector_to_json(b_enc);
  j["w_dec"] = detail::matrix_to_json(w_dec);
  j["b_dec"] = detail::vector_to_json(b_dec);
  j["unit_min"] = detail::vector_to_json(unit_min);
  j["unit_max"] = detail::vector_to_json(unit_max);
  return j.dump();
}

SaeModel SaeModel::from_json(std::string_view text) {
  const json j = detail::parse_json(text, "SAE model");
  detail::check_format(j, "chromabehave.sae", 1);
  SaeModel m;
  try {
    m.rho = j.at("rho").get<double>();
    m.beta = j.at("beta").get<double>();
    m.input_mean = detail::vector_from_json(j.at("input_mean"));
    m.input_scale = detail::vector_from_json(j.at("input_scale"));
    m.w_enc = detail::matrix_from_json(j.at("w_enc"));
    m.b_enc = detail::vector_from_json(j.at("b_enc"));
    m.w_dec = detail::matrix_from_json(j.at("w_dec"));
    m.b_dec = detail::vector_from_json(j.at("b_dec"));
    m.unit_min = detail::vector_from_json(j.at("unit_min"));
    m.unit_max = detail::vector_from_json(j.at("unit_max"));
  } catch (const json::exception& e) {
    fail(ErrorCode::CorruptFile, std::string("SAE model: ") + e.what());
  }
  const Index d = m.w_enc.cols(), h = m.w_enc.rows();
  if (m.input_mean.size() != d || m.input_scale.size() != d || m.b_enc.size() != h || m.w_dec.rows() != d ||
      m.w_dec.cols() != h || m.b_dec.size() != d || m.unit_min.size() != h || m.unit_max.size() != h) {
    fail(ErrorCode::CorruptFile, "SAE model tensor shapes are inconsistent");
  }
  return m;
}

void SaeModel::save(const std::filesystem::path& path) const { detail::write_file(path, to_json() + "\n"); }
SaeModel SaeModel::load(const std::filesystem::path& path) { return from_json(detail::read_file(path)); }

// ---------------------------------------------------------------------------
// Images

std::string_view representation_name(Representation r) {
  switch (r) {
    case Representation::Daily: return "daily";
    case Representation::Historical: return "historical";
    case Representation::Role: return "role";
  }
  return "daily";
}

Representation representation_from_name(std::string_view name) {
  const auto n = to_lower(trim(name));
  if (n == "daily") return Representation::Daily;
  if (n == "historical") return Representation::Historical;
  if (n == "role") return Representation::Role;
  fail(ErrorCode::InvalidArgument, "unknown representation '" + std::string(name) + "'");
}

GreyPixels ColorEncoding::channel(int c) const {
  GreyPixels out{};
  for (int p = 0; p < kImagePixels; ++p) out[static_cast<std::size_t>(p)] = at(p, c);
  return out;
}

GreyPixels grey_pixels(const SaeModel& model, const VectorXd& hidden) {
  if (hidden.size() != kImagePixels || model.hidden() != kImagePixels) {
    fail(ErrorCode::ShapeMismatch, "greyscale encoding needs exactly 1024 hidden units");
  }
  GreyPixels px{};
  for (Index j = 0; j < kImagePixels; ++j) {
    const double range = model.unit_max(j) - model.unit_min(j);
    if (!(range > 0)) continue;
    const double s = std::clamp((hidden(j) - model.unit_min(j)) / range, 0.0, 1.0);
    px[static_cast<std::size_t>(j)] = static_cast<std::uint8_t>(std::lround(255.0 * s));
  }
  return px;
}

GreyscaleEncoding encode_grey(const SaeModel& model, const features::FeatureVector& x, std::string user, Date date) {
  const VectorXd v = Eigen::Map<const VectorXd>(x.data(), static_cast<Index>(x.size()));
  GreyscaleEncoding g;
  g.pixels = grey_pixels(model, sae_forward(model, v).hidden);
  g.user = std::move(user);
  g.date = date;
  return g;
}

std::vector<GreyPixels> encode_grey_batch(const SaeModel& model, const MatrixXd& data) {
  if (!data.allFinite()) fail(ErrorCode::NonFiniteInput, "encoder input contains NaN or Inf");
  std::vector<GreyPixels> out(static_cast<std::size_t>(data.rows()));
  constexpr Index kChunk = 4096;
  for (Index start = 0; start < data.rows(); start += kChunk) {
    const Index n = std::min(kChunk, data.rows() - start);
    const MatrixXd act =
        preact(model, standardize(model, data.middleRows(start, n))).unaryExpr([](double v) { return selu(v); });
    for (Index i = 0; i < n; ++i) out[static_cast<std::size_t>(start + i)] = grey_pixels(model, act.row(i).transpose());
  }
  return out;
}

ColorEncoding compose(Representation rep, const GreyscaleEncoding& current, const GreyscaleEncoding& ctx1,
                      const GreyscaleEncoding& ctx2) {
  ColorEncoding img;
  img.representation = rep;
  img.user = current.user;
  img.date = current.date;
  for (int p = 0; p < kImagePixels; ++p) {
    const auto i = static_cast<std::size_t>(p);
    img.at(p, 0) = current.pixels[i];
    img.at(p, 1) = ctx1.pixels[i];
    img.at(p, 2) = ctx2.pixels[i];
  }
  img.provenance = {current.date.iso(), ctx1.date.iso(), ctx2.date.iso()};
  return img;
}

ColorEncoding augment_swap(const ColorEncoding& img) {
  ColorEncoding out = img;
  for (int p = 0; p < kImagePixels; ++p) std::swap(out.at(p, 1), out.at(p, 2));
  std::swap(out.provenance[1], out.provenance[2]);
  return out;
}

ColorEncoding augment_replace(const ColorEncoding& img, std::span<const GreyPixels> benign_pool, std::mt19937_64& rng) {
  if (benign_pool.empty()) fail(ErrorCode::EmptyPool, "no benign days to draw context from");
  const auto n = benign_pool.size();
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  const std::size_t a = pick(rng);
  std::size_t b = a;
  if (n >= 2) {
    std::uniform_int_distribution<std::size_t> other(0, n - 2);
    b = other(rng);
    if (b >= a) ++b;
  }
  ColorEncoding out = img;
  for (int p = 0; p < kImagePixels; ++p) {
    out.at(p, 1) = benign_pool[a][static_cast<std::size_t>(p)];
    out.at(p, 2) = benign_pool[b][static_cast<std::size_t>(p)];
  }
  out.provenance[1] = "benign-pool:" + std::to_string(a);
  out.provenance[2] = "benign-pool:" + std::to_string(b);
  return out;
}

// ---------------------------------------------------------------------------
// Dataset composition

MatrixXd feature_matrix(const std::vector<features::LabeledDay>& days) {
  MatrixXd m(static_cast<Index>(days.size()), static_cast<Index>(features::kFeatureCount));
  for (std::size_t i = 0; i < days.size(); ++i)
    for (std::size_t j = 0; j < features::kFeatureCount; ++j)
      m(static_cast<Index>(i), static_cast<Index>(j)) = days[i].day.f[j];
  return m;
}

std::vector<ContextPlan> plan_contexts(Representation rep, const std::vector<features::LabeledDay>& days,
                                       const std::vector<ingest::LdapRecord>& ldap) {
  std::map<std::string, std::vector<std::size_t>> by_user;
  for (std::size_t i = 0; i < days.size(); ++i) by_user[days[i].day.user].push_back(i);
  for (auto& [u, rows] : by_user) {
    std::stable_sort(rows.begin(), rows.end(),
                     [&](std::size_t a, std::size_t b) { return days[a].day.date < days[b].day.date; });
  }

  std::vector<ContextPlan> plans;
  if (rep == Representation::Daily) {
    for (const auto& [u, rows] : by_user) {
      for (std::size_t k = 2; k < rows.size(); ++k) {
        plans.push_back({rows[k], {rows[k - 1]}, {rows[k - 2]},
                         {days[rows[k]].day.date.iso(), days[rows[k - 1]].day.date.iso(),
                          days[rows[k - 2]].day.date.iso()}});
      }
    }
  } else if (rep == Representation::Historical) {
    for (const auto& [u, rows] : by_user) {
      for (std::size_t k = 1; k < rows.size(); ++k) {
        const Date d = days[rows[k]].day.date;
        ContextPlan p{rows[k], {}, {}, {}};
        for (std::size_t q = 0; q < k; ++q) {
          p.ctx1.push_back(rows[q]);
          if (days[rows[q]].day.date >= d - 7) p.ctx2.push_back(rows[q]);
        }
        if (p.ctx2.empty()) continue;
        p.provenance = {d.iso(), "mean:" + days[rows[0]].day.date.iso() + ".." + days[rows[k - 1]].day.date.iso(),
                        "mean:" + (d - 7).iso() + ".." + (d - 1).iso()};
        plans.push_back(std::move(p));
      }
    }
  } else {
    std::unordered_map<std::string, const ingest::LdapRecord*> dir;
    for (const auto& r : ldap) dir.emplace(r.user, &r);
    std::map<std::int32_t, std::vector<std::size_t>> by_date;
    for (std::size_t i = 0; i < days.size(); ++i) by_date[days[i].day.date.days].push_back(i);
    for (const auto& [u, rows] : by_user) {
      auto me = dir.find(u);
      if (me == dir.end()) continue;
      for (auto i : rows) {
        ContextPlan p{i, {}, {}, {}};
        for (auto j : by_date[days[i].day.date.days]) {
          if (j == i) continue;
          auto other = dir.find(days[j].day.user);
          if (other == dir.end()) continue;
          if (other->second->role == me->second->role) p.ctx1.push_back(j);
          if (other->second->team == me->second->team) p.ctx2.push_back(j);
        }
        if (p.ctx1.empty() || p.ctx2.empty()) continue;
        p.provenance = {days[i].day.date.iso(), "role:" + me->second->role, "team:" + me->second->team};
        plans.push_back(std::move(p));
      }
    }
  }
  std::sort(plans.begin(), plans.end(), [&](const ContextPlan& a, const ContextPlan& b) {
    const auto& x = days[a.current].day;
    const auto& y = days[b.current].day;
    return std::tie(x.date, x.user) < std::tie(y.date, y.user);
  });
  return plans;
}

std::vector<EncodedDay> compose_dataset(const SaeModel& model, Representation rep,
                                        const std::vector<features::LabeledDay>& days,
                                        const std::vector<ingest::LdapRecord>& ldap) {
  const auto plans = plan_contexts(rep, days, ldap);
  const MatrixXd x = feature_matrix(days);
  const auto row_px = encode_grey_batch(model, x);

  // Context channels of the daily representation are single rows; the others
  // are means that need their own encoding pass.
  std::vector<GreyPixels> ctx_px;
  if (rep != Representation::Daily) {
    MatrixXd means(static_cast<Index>(2 * plans.size()), x.cols());
    for (std::size_t k = 0; k < plans.size(); ++k) {
      for (int c = 0; c < 2; ++c) {
        const auto& rows = c == 0 ? plans[k].ctx1 : plans[k].ctx2;
        Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(x.cols());
        for (auto r : rows) acc += x.row(static_cast<Index>(r));
        means.row(static_cast<Index>(2 * k + c)) = acc / static_cast<double>(rows.size());
      }
    }
    ctx_px = encode_grey_batch(model, means);
  }

  std::vector<EncodedDay> out;
  out.reserve(plans.size());
  for (std::size_t k = 0; k < plans.size(); ++k) {
    const auto& p = plans[k];
    const auto& cur = days[p.current];
    EncodedDay e;
    e.label = cur.label;
    bool any = cur.malicious();
    for (auto r : p.ctx1) any = any || days[r].malicious();
    for (auto r : p.ctx2) any = any || days[r].malicious();
    e.any_channel_malicious = any;
    const GreyPixels& g1 = rep == Representation::Daily ? row_px[p.ctx1.front()] : ctx_px[2 * k];
    const GreyPixels& g2 = rep == Representation::Daily ? row_px[p.ctx2.front()] : ctx_px[2 * k + 1];
    auto& img = e.image;
    img.representation = rep;
    img.user = cur.day.user;
    img.date = cur.day.date;
    img.provenance = p.provenance;
    for (int q = 0; q < kImagePixels; ++q) {
      const auto i = static_cast<std::size_t>(q);
      img.at(q, 0) = row_px[p.current][i];
      img.at(q, 1) = g1[i];
      img.at(q, 2) = g2[i];
    }
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace chromabehave::encoder
