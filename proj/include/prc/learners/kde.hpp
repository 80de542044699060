#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "prc/learners/model.hpp"
#include "prc/smc.hpp"

namespace prc {

/// Input-kernel weights for one query. `fallback` is set when every kernel
/// value underflowed and uniform weights were substituted.
struct KdeWeights {
  std::vector<double> weights;  ///< normalized
  bool fallback = false;
};

/// Conditional Parzen-window density with Gaussian kernels:
///   p(y | z) = sum_i K_h(z, z_i) K_h(y, y_i) / sum_i K_h(z, z_i).
class KDEModel final : public ConditionalModel {
 public:
  static constexpr double kBandwidthFloor = 1e-3;

  /// Silverman's rule of thumb on the target column.
  static double silverman_bandwidth(std::span<const double> y) {
    const double n = static_cast<double>(y.size());
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : y) var += (v - mean) * (v - mean);
    const double sd = y.size() > 1 ? std::sqrt(var / (n - 1.0)) : 0.0;
    return std::max(1.06 * sd * std::pow(n, -0.2), kBandwidthFloor);
  }

  /// `bandwidth` overrides the rule when set.
  KDEModel(const Matrix& Z, std::span<const double> y, std::optional<double> bandwidth = {})
      : inputs_(Z), targets_(y.begin(), y.end()) {
    if (Z.rows() < 1) throw ArgumentError("KDE needs at least one training instance");
    if (static_cast<std::size_t>(Z.rows()) != y.size()) throw ArgumentError("KDE: row count mismatch");
    if (bandwidth && !(*bandwidth > 0.0)) throw ArgumentError("KDE bandwidth must be positive");
    h_ = bandwidth ? *bandwidth : silverman_bandwidth(y);
  }

  std::string name() const override { return "KDE"; }
  std::size_t input_dim() const override { return static_cast<std::size_t>(inputs_.cols()); }
  bool has_density() const override { return true; }
  std::optional<double> bandwidth() const override { return h_; }

  KdeWeights input_weights(std::span<const double> z) const {
    check_input(z);
    const auto n = static_cast<std::size_t>(inputs_.rows());
    std::vector<double> log_k(n);
    const Eigen::Map<const Vector> q(z.data(), static_cast<Eigen::Index>(z.size()));
    double best = kNegInf;
    for (std::size_t i = 0; i < n; ++i) {
      const double d2 = (inputs_.row(static_cast<Eigen::Index>(i)).transpose() - q).squaredNorm();
      log_k[i] = -0.5 * d2 / (h_ * h_);
      best = std::max(best, log_k[i]);
    }
    KdeWeights out;
    if (!(std::exp(best) > 0.0)) {
      out.weights.assign(n, 1.0 / static_cast<double>(n));
      out.fallback = true;
      return out;
    }
    out.weights = smc::normalize(log_k).weights;
    return out;
  }

  double log_pdf(std::span<const double> z, double y) const override {
    const auto w = input_weights(z).weights;
    std::vector<double> terms(w.size());
    const double var = h_ * h_;
    for (std::size_t i = 0; i < w.size(); ++i)
      terms[i] = w[i] > 0.0 ? std::log(w[i]) + normal_logpdf(y, targets_[i], var) : kNegInf;
    return smc::log_sum_exp(terms);
  }

  double sample(std::span<const double> z, Rng& rng) const override {
    const auto w = input_weights(z).weights;
    std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
    const std::size_t i = pick(rng);
    std::normal_distribution<double> jitter(targets_[i], h_);
    return jitter(rng);
  }

  double predict(std::span<const double> z) const override {
    const auto w = input_weights(z).weights;
    double acc = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) acc += w[i] * targets_[i];
    return acc;
  }

 private:
  Matrix inputs_;
  std::vector<double> targets_;
  double h_ = 1.0;
};

}  // namespace prc
