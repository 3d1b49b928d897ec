#include "chromabehave/explain.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <random>
#include <unordered_set>

#include <json.hpp>

namespace chromabehave::explain {

namespace {

struct RunningStat {
  double sum = 0, sum_sq = 0;
  std::size_t n = 0;
  void add(double x) {
    sum += x;
    sum_sq += x * x;
    ++n;
  }
  double mean() const { return n ? sum / static_cast<double>(n) : 0.0; }
  /// Standard error of the mean (population variance of the draws / n).
  double se() const {
    if (n < 2) return 0.0;
    const double m = mean();
    const double var = std::max(0.0, sum_sq / static_cast<double>(n) - m * m);
    return std::sqrt(var / static_cast<double>(n - 1));
  }
};

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double bce(int y, double p) {
  p = std::clamp(p, 1e-7, 1.0 - 1e-7);
  return y ? -std::log(p) : -std::log(1.0 - p);
}

}  // namespace

double AttributionReport::shapley_sum() const {
  double s = 0;
  for (const auto& p : players) s += p.shapley;
  return s;
}

double AttributionReport::shapley_sum_se() const {
  double s = 0;
  for (const auto& p : players) s += p.shapley_se * p.shapley_se;
  return std::sqrt(s);
}

std::string AttributionReport::to_json() const {
  nlohmann::ordered_json j;
  j["format"] = "chromabehave.attribution";
  j["version"] = 1;
  j["value_full"] = value_full;
  j["value_empty"] = value_empty;
  j["permutations"] = permutations;
  j["subsets"] = subsets;
  j["seed"] = seed;
  auto& arr = j["features"] = nlohmann::ordered_json::array();
  for (const auto& p : players) {
    arr.push_back({{"name", p.name},
                   {"shapley", p.shapley},
                   {"shapley_se", p.shapley_se},
                   {"banzhaf", p.banzhaf},
                   {"banzhaf_se", p.banzhaf_se},
                   {"remove_individual", p.remove_individual},
                   {"include_individual", p.include_individual},
                   {"mean_when_included", p.mean_when_included},
                   {"mean_when_included_se", p.mean_when_included_se}});
  }
  return j.dump(2);
}

AttributionReport attribute(const ValueFn& value, int n_players, const AttributionConfig& cfg,
                            const std::vector<std::string>& names) {
  if (n_players < 1 || n_players > kMaxPlayers) fail(ErrorCode::InvalidArgument, "player count out of range");
  if (!names.empty() && static_cast<int>(names.size()) != n_players)
    fail(ErrorCode::LengthMismatch, "one name per player required");
  if (cfg.permutations < 1 || cfg.subsets < 1) fail(ErrorCode::InvalidArgument, "estimator budgets must be positive");

  std::unordered_map<Coalition, double> cache;
  auto v = [&](Coalition c) {
    auto it = cache.find(c);
    if (it != cache.end()) return it->second;
    const double x = value(c);
    if (!std::isfinite(x)) fail(ErrorCode::NonFiniteInput, "game value is not finite");
    cache.emplace(c, x);
    return x;
  };
  const auto n = static_cast<std::size_t>(n_players);
  const Coalition full = n_players == 64 ? ~Coalition{0} : (Coalition{1} << n_players) - 1;

  AttributionReport rep;
  rep.seed = cfg.seed;
  rep.value_full = v(full);
  rep.value_empty = v(0);
  rep.players.resize(n);
  for (std::size_t i = 0; i < n; ++i) rep.players[i].name = names.empty() ? std::to_string(i) : names[i];

  std::mt19937_64 rng(mix(cfg.seed));

  // Shapley: antithetic permutation pairs; one draw = the pair average. For
  // small games the pairs are drawn without replacement, so a budget of n!
  // orderings or more enumerates them all.
  double population = 0;  // distinct pairs, 0 when too many to track
  if (n_players <= 10) {
    population = 1;
    for (int k = 2; k <= n_players; ++k) population *= k;
    if (n_players > 1) population /= 2;
  }
  int pairs = (cfg.permutations + 1) / 2;
  if (population > 0) pairs = static_cast<int>(std::min<double>(pairs, population));
  rep.permutations = n_players == 1 ? pairs : 2 * pairs;
  std::vector<RunningStat> shap(n);
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> contrib(n);
  std::unordered_set<std::uint64_t> seen;
  auto pair_key = [&] {
    std::uint64_t fwd = 0, rev = 0;
    for (std::size_t k = 0; k < n; ++k) {
      fwd = fwd * 16 + static_cast<std::uint64_t>(order[k]);
      rev = rev * 16 + static_cast<std::uint64_t>(order[n - 1 - k]);
    }
    return std::min(fwd, rev);
  };
  for (int p = 0; p < pairs; ++p) {
    std::shuffle(order.begin(), order.end(), rng);
    if (population > 0)
      while (!seen.insert(pair_key()).second) std::shuffle(order.begin(), order.end(), rng);
    std::fill(contrib.begin(), contrib.end(), 0.0);
    for (int pass = 0; pass < 2; ++pass) {
      Coalition c = 0;
      double prev = rep.value_empty;
      for (std::size_t k = 0; k < n; ++k) {
        const int player = order[pass == 0 ? k : n - 1 - k];
        c |= Coalition{1} << player;
        const double cur = v(c);
        contrib[static_cast<std::size_t>(player)] += 0.5 * (cur - prev);
        prev = cur;
      }
    }
    for (std::size_t i = 0; i < n; ++i) shap[i].add(contrib[i]);
  }
  // finite-population correction for draws without replacement
  const double fpc = population > 1 ? std::sqrt((population - pairs) / (population - 1)) : (population == 1 ? 0.0 : 1.0);

  // Banzhaf and mean-when-included from uniform random coalitions.
  rep.subsets = cfg.subsets;
  std::vector<RunningStat> banz(n), included(n);
  std::bernoulli_distribution coin(0.5);
  for (int s = 0; s < cfg.subsets; ++s) {
    Coalition c = 0;
    for (std::size_t i = 0; i < n; ++i)
      if (coin(rng)) c |= Coalition{1} << i;
    for (std::size_t i = 0; i < n; ++i) {
      const Coalition bit = Coalition{1} << i;
      const double with = v(c | bit);
      banz[i].add(with - v(c & ~bit));
      included[i].add(with);
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    const Coalition bit = Coalition{1} << i;
    auto& out = rep.players[i];
    out.shapley = shap[i].mean();
    out.shapley_se = shap[i].se() * fpc;
    out.banzhaf = banz[i].mean();
    out.banzhaf_se = banz[i].se();
    out.mean_when_included = included[i].mean();
    out.mean_when_included_se = included[i].se();
    out.remove_individual = rep.value_full - v(full & ~bit);
    out.include_individual = v(bit) - rep.value_empty;
  }
  return rep;
}

std::vector<double> exact_shapley(const ValueFn& value, int n_players) {
  if (n_players < 1 || n_players > 20) fail(ErrorCode::InvalidArgument, "exact Shapley supports 1..20 players");
  const Coalition count = Coalition{1} << n_players;
  std::vector<double> vals(count);
  for (Coalition c = 0; c < count; ++c) vals[c] = value(c);
  // weight(|S|) = |S|! (n-|S|-1)! / n!
  std::vector<double> weight(static_cast<std::size_t>(n_players));
  for (int s = 0; s < n_players; ++s) {
    double w = 1.0 / n_players;
    // 1 / (n * C(n-1, s))
    double binom = 1;
    for (int k = 1; k <= s; ++k) binom = binom * (n_players - 1 - s + k) / k;
    weight[static_cast<std::size_t>(s)] = w / binom;
  }
  std::vector<double> out(static_cast<std::size_t>(n_players), 0.0);
  for (Coalition c = 0; c < count; ++c) {
    const int size = std::popcount(c);
    for (int i = 0; i < n_players; ++i) {
      const Coalition bit = Coalition{1} << i;
      if (c & bit) continue;
      out[static_cast<std::size_t>(i)] += weight[static_cast<std::size_t>(size)] * (vals[c | bit] - vals[c]);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

RemovalExplainer::RemovalExplainer(BatchModel model, Eigen::MatrixXd eval_x, std::vector<int> eval_y,
                                   Eigen::MatrixXd background, ExplainerConfig cfg)
    : model_(std::move(model)),
      eval_x_(std::move(eval_x)),
      eval_y_(std::move(eval_y)),
      background_(std::move(background)),
      cfg_(cfg) {
  if (background_.rows() == 0) fail(ErrorCode::EmptyBackground, "background set is empty");
  if (eval_x_.cols() != background_.cols())
    fail(ErrorCode::DimensionMismatch, "evaluation and background feature counts differ");
  if (static_cast<Eigen::Index>(eval_y_.size()) != eval_x_.rows())
    fail(ErrorCode::LengthMismatch, "one label per evaluation row required");
  if (cfg_.neighbors < 1 || cfg_.samples < 1) fail(ErrorCode::InvalidArgument, "neighbors and samples must be positive");
  const Eigen::RowVectorXd mean = background_.colwise().mean();
  scale_ = ((background_.rowwise() - mean).array().square().colwise().mean()).sqrt().matrix();
  for (Eigen::Index j = 0; j < scale_.size(); ++j)
    if (!(scale_(j) > 0)) scale_(j) = 1.0;
}

std::vector<std::size_t> RemovalExplainer::donors(const Eigen::VectorXd& x, const std::vector<bool>& kept,
                                                  std::uint64_t salt) const {
  const auto rows = static_cast<std::size_t>(background_.rows());
  const bool none_kept = std::none_of(kept.begin(), kept.end(), [](bool b) { return b; });
  std::vector<std::size_t> out;
  if (none_kept) {
    out.resize(rows);
    std::iota(out.begin(), out.end(), 0);
    return out;
  }
  if (!cfg_.conditional) {
    std::mt19937_64 rng(mix(cfg_.seed ^ mix(salt)));
    std::uniform_int_distribution<std::size_t> pick(0, rows - 1);
    for (int s = 0; s < cfg_.samples; ++s) out.push_back(pick(rng));
    return out;
  }
  std::vector<std::pair<double, std::size_t>> dist(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    double d = 0;
    for (std::size_t j = 0; j < kept.size(); ++j) {
      if (!kept[j]) continue;
      const double z = (background_(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) - x(static_cast<Eigen::Index>(j))) /
                       scale_(static_cast<Eigen::Index>(j));
      d += z * z;
    }
    dist[r] = {d, r};
  }
  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(cfg_.neighbors), rows);
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
  for (std::size_t i = 0; i < k; ++i) out.push_back(dist[i].second);
  return out;
}

namespace {

std::uint64_t kept_key(const std::vector<bool>& kept) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (bool b : kept) h = (h ^ (b ? 1u : 0u)) * 0x100000001b3ULL;
  return h;
}

}  // namespace

Eigen::VectorXd RemovalExplainer::surrogate_batch(const std::vector<bool>& kept) const {
  if (kept.size() != features()) fail(ErrorCode::DimensionMismatch, "kept mask length differs from feature count");
  const auto n = eval_rows();
  const bool all_kept = std::all_of(kept.begin(), kept.end(), [](bool b) { return b; });
  std::vector<std::size_t> owner;
  if (all_kept) {
    owner.resize(n);
    std::iota(owner.begin(), owner.end(), 0);
    return model_(owner, eval_x_);
  }
  const auto key = kept_key(kept);
  std::vector<std::vector<std::size_t>> picks(n);
  std::size_t total = 0;
  for (std::size_t r = 0; r < n; ++r) {
    picks[r] = donors(eval_x_.row(static_cast<Eigen::Index>(r)).transpose(), kept, key ^ mix(r));
    total += picks[r].size();
  }
  Eigen::MatrixXd rows(static_cast<Eigen::Index>(total), eval_x_.cols());
  owner.reserve(total);
  Eigen::Index k = 0;
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t d : picks[r]) {
      rows.row(k) = background_.row(static_cast<Eigen::Index>(d));
      for (std::size_t j = 0; j < kept.size(); ++j)
        if (kept[j]) rows(k, static_cast<Eigen::Index>(j)) = eval_x_(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j));
      owner.push_back(r);
      ++k;
    }
  }
  const Eigen::VectorXd out = model_(owner, rows);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < owner.size(); ++i) mean(static_cast<Eigen::Index>(owner[i])) += out(static_cast<Eigen::Index>(i));
  for (std::size_t r = 0; r < n; ++r) mean(static_cast<Eigen::Index>(r)) /= static_cast<double>(picks[r].size());
  return mean;
}

double RemovalExplainer::surrogate_eval(std::size_t row, const std::vector<bool>& kept) const {
  if (row >= eval_rows()) fail(ErrorCode::InvalidArgument, "evaluation row out of range");
  return surrogate_eval(Eigen::VectorXd(eval_x_.row(static_cast<Eigen::Index>(row)).transpose()), kept);
}

double RemovalExplainer::surrogate_eval(const Eigen::VectorXd& x, const std::vector<bool>& kept) const {
  if (kept.size() != features() || static_cast<std::size_t>(x.size()) != features())
    fail(ErrorCode::DimensionMismatch, "feature vector length differs from background");
  const bool all_kept = std::all_of(kept.begin(), kept.end(), [](bool b) { return b; });
  std::vector<std::size_t> picks;
  Eigen::MatrixXd rows;
  if (all_kept) {
    rows = x.transpose();
  } else {
    picks = donors(x, kept, kept_key(kept) ^ mix(0));
    rows.resize(static_cast<Eigen::Index>(picks.size()), x.size());
    for (std::size_t i = 0; i < picks.size(); ++i) {
      rows.row(static_cast<Eigen::Index>(i)) = background_.row(static_cast<Eigen::Index>(picks[i]));
      for (std::size_t j = 0; j < kept.size(); ++j)
        if (kept[j]) rows(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = x(static_cast<Eigen::Index>(j));
    }
  }
  const std::vector<std::size_t> owner(static_cast<std::size_t>(rows.rows()), 0);
  return model_(owner, rows).mean();
}

double RemovalExplainer::dataset_value(const std::vector<int>& players, Coalition coalition) const {
  std::vector<bool> kept(features(), true);
  for (std::size_t i = 0; i < players.size(); ++i) {
    const int f = players[i];
    if (f < 0 || static_cast<std::size_t>(f) >= features()) fail(ErrorCode::InvalidArgument, "player is not a feature");
    if (!(coalition & (Coalition{1} << i))) kept[static_cast<std::size_t>(f)] = false;
  }
  const Eigen::VectorXd p = surrogate_batch(kept);
  double loss = 0;
  for (std::size_t r = 0; r < eval_rows(); ++r) loss += bce(eval_y_[r], p(static_cast<Eigen::Index>(r)));
  return -loss / static_cast<double>(eval_rows());
}

AttributionReport RemovalExplainer::attribute(const std::vector<int>& players, const std::vector<std::string>& names,
                                              const AttributionConfig& cfg) const {
  return explain::attribute([&](Coalition c) { return dataset_value(players, c); }, static_cast<int>(players.size()),
                            cfg, names);
}

BatchModel detector_model(const encoder::SaeModel& sae, const detector::DetectionModel& model,
                          std::vector<detector::Sample> eval) {
  return [&sae, &model, eval = std::move(eval)](std::span<const std::size_t> owner, const Eigen::MatrixXd& rows) {
    const auto grey = encoder::encode_grey_batch(sae, rows);
    Eigen::VectorXd out(static_cast<Eigen::Index>(owner.size()));
    constexpr std::size_t kChunk = 512;
    std::vector<detector::Sample> batch;
    for (std::size_t start = 0; start < owner.size(); start += kChunk) {
      const std::size_t end = std::min(owner.size(), start + kChunk);
      batch.clear();
      for (std::size_t i = start; i < end; ++i) {
        detector::Sample s = eval.at(owner[i]);
        for (int px = 0; px < encoder::kImagePixels; ++px) s.image.at(px, 0) = grey[i][static_cast<std::size_t>(px)];
        batch.push_back(std::move(s));
      }
      const auto p = detector::predict_batch(model, batch);
      for (std::size_t i = start; i < end; ++i) out(static_cast<Eigen::Index>(i)) = p[i - start];
    }
    return out;
  };
}

std::vector<int> parse_feature_list(const std::string& spec) {
  std::vector<int> out;
  std::size_t pos = 0;
  while (pos <= spec.size()) {
    const auto comma = spec.find(',', pos);
    const std::string item = trim(spec.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos));
    pos = comma == std::string::npos ? spec.size() + 1 : comma + 1;
    if (item.empty()) continue;
    if (item.back() == '*') {
      const std::string prefix = item.substr(0, item.size() - 1);
      bool any = false;
      for (std::size_t i = 0; i < features::kFeatureCount; ++i) {
        if (features::kFeatureNames[i].substr(0, prefix.size()) == prefix) {
          out.push_back(static_cast<int>(i));
          any = true;
        }
      }
      if (!any) fail(ErrorCode::InvalidArgument, "no feature matches '" + item + "'");
      continue;
    }
    const int i = features::feature_index(item);
    if (i < 0) fail(ErrorCode::InvalidArgument, "unknown feature '" + item + "'");
    out.push_back(i);
  }
  // Keep first occurrence order, drop duplicates.
  std::vector<int> unique;
  for (int i : out)
    if (std::find(unique.begin(), unique.end(), i) == unique.end()) unique.push_back(i);
  return unique;
}

}  // namespace chromabehave::explain
