#pragma once

// Loss metrics, the cross-validation loop and average ranks across methods.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <string>
#include <variant>
#include <vector>

#include "prc/chains.hpp"
#include "prc/data.hpp"

namespace prc {

namespace detail {
inline void check_shapes(const Matrix& Y, const Matrix& Yhat) {
  if (Y.rows() != Yhat.rows() || Y.cols() != Yhat.cols())
    throw ArgumentError("metric inputs differ in shape");
  if (Y.size() == 0) throw ArgumentError("metric inputs are empty");
}
}  // namespace detail

/// Squared error averaged over all N*L entries.
inline double mse(const Matrix& Y, const Matrix& Yhat) {
  detail::check_shapes(Y, Yhat);
  return (Y - Yhat).array().square().mean();
}

/// Absolute error averaged over all N*L entries.
inline double mae(const Matrix& Y, const Matrix& Yhat) {
  detail::check_shapes(Y, Yhat);
  return (Y - Yhat).array().abs().mean();
}

/// Fraction of instances whose prediction lies at Euclidean distance >= c.
inline double zero_one_approx(const Matrix& Y, const Matrix& Yhat, double c) {
  detail::check_shapes(Y, Yhat);
  if (!(c > 0.0)) throw ArgumentError("0/1 threshold c must be positive");
  double misses = 0.0;
  for (Eigen::Index i = 0; i < Y.rows(); ++i)
    if (!((Y.row(i) - Yhat.row(i)).norm() < c)) misses += 1.0;
  return misses / static_cast<double>(Y.rows());
}

// ---------------------------------------------------------------------------
// Methods

struct MethodConfig {
  LearnerParams learner{};
  PFConfig inference{};  ///< particles and estimator are shared by MC and PF
  std::vector<std::size_t> order;
  bool sampler_uses_x = false;
};

/// A method fitted on one training split.
class FittedMethod {
 public:
  FittedMethod(const Dataset& train, MethodKey key, MethodConfig cfg, std::uint64_t seed)
      : key_(std::move(key)), cfg_(std::move(cfg)) {
    switch (key_.regime) {
      case Regime::independent:
        model_ = fit_independent(train, key_.evaluator, cfg_.learner, seed);
        break;
      case Regime::greedy:
        model_ = fit_chain(train, {key_.evaluator, key_.evaluator, ChainMode::point, cfg_.order, false}, cfg_.learner, seed);
        break;
      case Regime::monte_carlo:
        model_ = fit_chain(train, {key_.evaluator, key_.evaluator, ChainMode::density, cfg_.order, false}, cfg_.learner, seed);
        break;
      case Regime::particle_filter:
        model_ = fit_chain(train, {key_.sampler, key_.evaluator, ChainMode::pf, cfg_.order, cfg_.sampler_uses_x},
                           cfg_.learner, seed);
        break;
    }
  }

  const MethodKey& key() const { return key_; }
  bool stochastic() const { return key_.regime == Regime::monte_carlo || key_.regime == Regime::particle_filter; }

  Prediction predict(std::span<const double> x, Rng& rng) const {
    switch (key_.regime) {
      case Regime::independent: return {std::get<IndependentModel>(model_).predict(x), Estimator::mmse, nullptr};
      case Regime::greedy: return {predict_greedy(std::get<ChainModel>(model_), x), Estimator::mmse, nullptr};
      case Regime::monte_carlo:
        return predict_mc(std::get<ChainModel>(model_), x, cfg_.inference.particles, rng, cfg_.inference.estimator,
                          cfg_.inference.custom);
      case Regime::particle_filter: return predict_pf(std::get<ChainModel>(model_), x, cfg_.inference, rng);
    }
    throw ConfigError("unhandled regime");
  }

 private:
  MethodKey key_;
  MethodConfig cfg_;
  std::variant<IndependentModel, ChainModel> model_;
};

// ---------------------------------------------------------------------------
// Cross validation

struct FoldMetrics {
  double mse = 0.0;
  double mae = 0.0;
  double zero_one = 0.0;
};

struct MetricReport {
  double mse = 0.0;
  double mae = 0.0;
  double zero_one = 0.0;
  double c = 0.1;
  std::vector<FoldMetrics> per_fold;
};

/// Called once per test instance with its global row index, its standardized
/// truth and the prediction (which carries the cloud for MC/PF methods).
using PredictionSink =
    std::function<void(std::size_t fold, std::size_t instance, const Vector& truth, const Prediction& prediction)>;

/// Per fold: standardize with training statistics, fit, predict the test
/// split and score on the standardized scale. Fold scores are averaged.
inline MetricReport cross_validate(const Dataset& data, const std::string& method_key, std::size_t k,
                                   std::uint64_t seed, const MethodConfig& cfg, double c = 0.1,
                                   const PredictionSink& sink = {}) {
  const auto key = parse_method_key(method_key);
  if (!(c > 0.0)) throw ArgumentError("0/1 threshold c must be positive");
  data.validate();
  const auto plan = kfold(static_cast<std::size_t>(data.size()), k, seed);
  MetricReport report;
  report.c = c;
  for (std::size_t f = 0; f < k; ++f) {
    const auto train_idx = plan.train_indices(f);
    const auto test_idx = plan.test_indices(f);
    if (train_idx.size() < 2) throw ArgumentError("fold " + std::to_string(f) + " has fewer than 2 training instances");
    const auto raw_train = data.subset(train_idx);
    const auto scaler = fit_scaler(raw_train);
    const auto train = scaler.apply(raw_train);
    const auto test = scaler.apply(data.subset(test_idx));

    const FittedMethod method(train, key, cfg, derive_seed(seed, 0x9e37, f));
    Matrix Yhat(test.size(), test.n_targets());
    for (Eigen::Index i = 0; i < test.size(); ++i) {
      const auto instance = test_idx[static_cast<std::size_t>(i)];
      Rng rng = make_rng(seed, f, instance);
      const auto pred = method.predict(row_span(test.X, i), rng);
      Yhat.row(i) = pred.y_hat.transpose();
      if (sink) sink(f, instance, test.Y.row(i).transpose(), pred);
    }
    report.per_fold.push_back({mse(test.Y, Yhat), mae(test.Y, Yhat), zero_one_approx(test.Y, Yhat, c)});
  }
  const double n = static_cast<double>(report.per_fold.size());
  for (const auto& fm : report.per_fold) {
    report.mse += fm.mse / n;
    report.mae += fm.mae / n;
    report.zero_one += fm.zero_one / n;
  }
  return report;
}

// ---------------------------------------------------------------------------
// Ranking

/// Ranks 1..n within one row; tied values share the average of their ranks.
/// NaN cells are skipped and receive NaN.
inline std::vector<double> rank_row(std::span<const double> values, bool lower_is_better) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < values.size(); ++i)
    if (!std::isnan(values[i])) idx.push_back(i);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return lower_is_better ? values[a] < values[b] : values[a] > values[b];
  });
  std::vector<double> ranks(values.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t s = 0; s < idx.size();) {
    std::size_t e = s;
    while (e + 1 < idx.size() && values[idx[e + 1]] == values[idx[s]]) ++e;
    const double avg = 0.5 * static_cast<double>(s + e) + 1.0;
    for (std::size_t t = s; t <= e; ++t) ranks[idx[t]] = avg;
    s = e + 1;
  }
  return ranks;
}

/// Mean rank per method (column) over datasets (rows), ignoring missing cells.
inline std::vector<double> avg_rank_partial(const std::vector<std::vector<double>>& values, bool lower_is_better) {
  if (values.empty()) return {};
  const std::size_t cols = values.front().size();
  std::vector<double> sum(cols, 0.0), count(cols, 0.0);
  for (const auto& row : values) {
    if (row.size() != cols) throw ArgumentError("ragged rank table");
    const auto r = rank_row(row, lower_is_better);
    for (std::size_t j = 0; j < cols; ++j)
      if (!std::isnan(r[j])) {
        sum[j] += r[j];
        count[j] += 1.0;
      }
  }
  std::vector<double> out(cols);
  for (std::size_t j = 0; j < cols; ++j)
    out[j] = count[j] > 0.0 ? sum[j] / count[j] : std::numeric_limits<double>::quiet_NaN();
  return out;
}

/// Mean rank per method over a complete dataset x method table.
inline std::vector<double> avg_rank(const std::vector<std::vector<double>>& values, bool lower_is_better = true) {
  for (const auto& row : values)
    for (double v : row)
      if (std::isnan(v)) throw ArgumentError("avg_rank needs a complete table");
  return avg_rank_partial(values, lower_is_better);
}

}  // namespace prc
