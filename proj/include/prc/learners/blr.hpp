#pragma once

#include <algorithm>
#include <cmath>
#include <random>

#include "prc/learners/model.hpp"

namespace prc {

/// Bayesian linear regression with an isotropic Gaussian prior on the weights
/// (intercept included). The posterior N(mean, covariance) is conjugate given
/// the noise variance, which is estimated from training residuals.
class BLRModel final : public ConditionalModel {
 public:
  static constexpr double kNoiseFloor = 1e-8;

  BLRModel(const Matrix& Z, std::span<const double> y, double prior_precision)
      : dim_(static_cast<std::size_t>(Z.cols())), prior_precision_(prior_precision) {
    if (Z.rows() < 1) throw ArgumentError("BLR needs at least one training instance");
    if (static_cast<std::size_t>(Z.rows()) != y.size()) throw ArgumentError("BLR: row count mismatch");
    if (!(prior_precision > 0.0)) throw ArgumentError("BLR prior_precision must be positive");

    const Eigen::Index n = Z.rows();
    const Eigen::Index p = Z.cols() + 1;
    Eigen::MatrixXd phi(n, p);
    phi.col(0).setOnes();
    phi.rightCols(Z.cols()) = Z;
    const Eigen::Map<const Vector> target(y.data(), n);
    const Eigen::MatrixXd gram = phi.transpose() * phi;
    const Vector proj = phi.transpose() * target;

    // One refinement: a unit-noise posterior gives residuals, whose mean
    // square becomes the noise variance of the final posterior.
    auto solve = [&](double noise) {
      Eigen::MatrixXd precision = gram / noise;
      precision.diagonal().array() += prior_precision;
      Eigen::LLT<Eigen::MatrixXd> llt(precision);
      if (llt.info() != Eigen::Success) throw NumericalError("BLR posterior precision not positive definite");
      weight_mean_ = llt.solve(proj / noise);
      weight_covariance_ = llt.solve(Eigen::MatrixXd::Identity(p, p));
    };
    solve(1.0);
    noise_variance_ = std::max((target - phi * weight_mean_).squaredNorm() / static_cast<double>(n), kNoiseFloor);
    solve(noise_variance_);
    weight_covariance_ = 0.5 * (weight_covariance_ + weight_covariance_.transpose());
  }

  std::string name() const override { return "BLR"; }
  std::size_t input_dim() const override { return dim_; }
  bool has_density() const override { return true; }

  double predict(std::span<const double> z) const override {
    check_input(z);
    return weight_mean_[0] + Eigen::Map<const Vector>(z.data(), static_cast<Eigen::Index>(z.size()))
                                 .dot(weight_mean_.tail(static_cast<Eigen::Index>(dim_)));
  }

  /// Predictive variance: noise plus weight uncertainty at z.
  double predictive_variance(std::span<const double> z) const {
    check_input(z);
    Vector phi(static_cast<Eigen::Index>(dim_ + 1));
    phi[0] = 1.0;
    for (std::size_t i = 0; i < dim_; ++i) phi[static_cast<Eigen::Index>(i + 1)] = z[i];
    return noise_variance_ + phi.dot(weight_covariance_ * phi);
  }

  double log_pdf(std::span<const double> z, double y) const override {
    return normal_logpdf(y, predict(z), predictive_variance(z));
  }

  double sample(std::span<const double> z, Rng& rng) const override {
    std::normal_distribution<double> draw(predict(z), std::sqrt(predictive_variance(z)));
    return draw(rng);
  }

  const Vector& weight_mean() const { return weight_mean_; }
  const Eigen::MatrixXd& weight_covariance() const { return weight_covariance_; }
  double noise_variance() const { return noise_variance_; }
  double prior_precision() const { return prior_precision_; }

 private:
  std::size_t dim_;
  double prior_precision_;
  double noise_variance_ = 1.0;
  Vector weight_mean_;
  Eigen::MatrixXd weight_covariance_;
};

/// Ordinary least squares without an intercept (minimum-norm solution).
class LeastSquaresModel final : public ConditionalModel {
 public:
  LeastSquaresModel(const Matrix& Z, std::span<const double> y) : dim_(static_cast<std::size_t>(Z.cols())) {
    if (Z.rows() < 1) throw ArgumentError("least squares needs at least one training instance");
    if (static_cast<std::size_t>(Z.rows()) != y.size()) throw ArgumentError("least squares: row count mismatch");
    const Eigen::MatrixXd A = Z;
    weights_ = A.completeOrthogonalDecomposition().solve(
        Eigen::Map<const Vector>(y.data(), static_cast<Eigen::Index>(y.size())));
  }

  std::string name() const override { return "OLS"; }
  std::size_t input_dim() const override { return dim_; }

  double predict(std::span<const double> z) const override {
    check_input(z);
    return Eigen::Map<const Vector>(z.data(), static_cast<Eigen::Index>(z.size())).dot(weights_);
  }

  const Vector& weights() const { return weights_; }

 private:
  std::size_t dim_;
  Vector weights_;
};

}  // namespace prc
