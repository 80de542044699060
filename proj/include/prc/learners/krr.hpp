#pragma once

#include <cmath>
#include <limits>
#include <numeric>
#include <tuple>
#include <utility>
#include <vector>

#include "prc/data.hpp"
#include "prc/learners/model.hpp"

namespace prc {

/// Kernel ridge regression with k(z, z') = exp(-gamma |z - z'|^2).
class KRRModel final : public ConditionalModel {
 public:
  static constexpr int kMaxRidgeRetries = 3;

  KRRModel(const Matrix& Z, std::span<const double> y, double ridge, double kernel_width)
      : inputs_(Z), ridge_(ridge), gamma_(kernel_width) {
    if (Z.rows() < 1) throw ArgumentError("KRR needs at least one training instance");
    if (static_cast<std::size_t>(Z.rows()) != y.size()) throw ArgumentError("KRR: row count mismatch");
    if (!(ridge > 0.0)) throw ArgumentError("KRR ridge must be positive");
    if (!(kernel_width > 0.0)) throw ArgumentError("KRR kernel width must be positive");

    const Eigen::Map<const Vector> target(y.data(), Z.rows());
    std::tie(dual_, ridge_) = solve(gram(Z, Z, gamma_), target, ridge_);
  }

  /// Solves (K + ridge I) c = y by Cholesky. On failure, or when the residual
  /// exceeds 1e-6 |y|, the ridge grows tenfold, up to kMaxRidgeRetries times.
  /// Returns the coefficients and the ridge actually used.
  static std::pair<Vector, double> solve(const Eigen::MatrixXd& K, const Vector& target, double ridge) {
    const double tolerance = 1e-6 * std::max(target.norm(), std::numeric_limits<double>::min());
    for (int attempt = 0; attempt <= kMaxRidgeRetries; ++attempt) {
      Eigen::MatrixXd A = K;
      A.diagonal().array() += ridge;
      Eigen::LLT<Eigen::MatrixXd> llt(A);
      if (llt.info() == Eigen::Success) {
        Vector dual = llt.solve(target);
        if (dual.allFinite() && (A * dual - target).norm() <= tolerance) return {std::move(dual), ridge};
      }
      ridge *= 10.0;
    }
    throw NumericalError("KRR: kernel system could not be factorized after ridge increases");
  }

  static Eigen::MatrixXd gram(const Matrix& A, const Matrix& B, double gamma) {
    Eigen::MatrixXd K(A.rows(), B.rows());
    const Vector a2 = A.rowwise().squaredNorm();
    const Vector b2 = B.rowwise().squaredNorm();
    K.noalias() = -2.0 * A * B.transpose();
    K.colwise() += a2;
    K.rowwise() += b2.transpose();
    return (-gamma * K.array().max(0.0)).exp().matrix();
  }

  std::string name() const override { return "KRR"; }
  std::size_t input_dim() const override { return static_cast<std::size_t>(inputs_.cols()); }

  double predict(std::span<const double> z) const override {
    check_input(z);
    const Eigen::Map<const Vector> q(z.data(), static_cast<Eigen::Index>(z.size()));
    double acc = 0.0;
    for (Eigen::Index i = 0; i < inputs_.rows(); ++i)
      acc += dual_[i] * std::exp(-gamma_ * (inputs_.row(i).transpose() - q).squaredNorm());
    return acc;
  }

  /// Ridge actually used (larger than requested if retries were needed).
  double ridge() const { return ridge_; }
  double kernel_width() const { return gamma_; }
  const Vector& dual_coefficients() const { return dual_; }

 private:
  Matrix inputs_;
  double ridge_;
  double gamma_;
  Vector dual_;
};

struct KrrSelection {
  double ridge = 1.0;
  double kernel_width = 1.0;
  double cv_mse = 0.0;
};

/// Grid search over (ridge, kernel width) by inner k-fold CV on MSE.
/// Ties keep the earliest grid point (ridge-major order).
inline KrrSelection krr_grid_search(const Matrix& Z, std::span<const double> y, std::span<const double> ridges,
                                    std::span<const double> widths, std::size_t folds, std::uint64_t seed) {
  if (ridges.empty() || widths.empty()) throw ArgumentError("KRR grid must be non-empty");
  const auto n = static_cast<std::size_t>(Z.rows());
  KrrSelection best{ridges[0], widths[0], std::numeric_limits<double>::infinity()};
  if (ridges.size() * widths.size() == 1 || n < 4) return best;
  const auto plan = kfold(n, std::min(folds, n / 2), seed);

  std::vector<std::vector<std::size_t>> train(plan.k), test(plan.k);
  for (std::size_t f = 0; f < plan.k; ++f) {
    train[f] = plan.train_indices(f);
    test[f] = plan.test_indices(f);
  }
  auto rows_of = [&](const std::vector<std::size_t>& idx) {
    Matrix out(idx.size(), Z.cols());
    for (std::size_t r = 0; r < idx.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = Z.row(static_cast<Eigen::Index>(idx[r]));
    return out;
  };
  auto values_of = [&](const std::vector<std::size_t>& idx) {
    Vector out(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t r = 0; r < idx.size(); ++r) out[static_cast<Eigen::Index>(r)] = y[idx[r]];
    return out;
  };

  // Gram matrices depend only on (fold, width), so each is built once and shared across ridges.
  const std::size_t R = ridges.size(), W = widths.size();
  std::vector<double> sse(R * W, 0.0);
  std::vector<bool> failed(R * W, false);
  for (std::size_t f = 0; f < plan.k; ++f) {
    const Matrix Ztr = rows_of(train[f]), Zte = rows_of(test[f]);
    const Vector ytr = values_of(train[f]), yte = values_of(test[f]);
    for (std::size_t w = 0; w < W; ++w) {
      const Eigen::MatrixXd K = KRRModel::gram(Ztr, Ztr, widths[w]);
      const Eigen::MatrixXd Kte = KRRModel::gram(Zte, Ztr, widths[w]);
      for (std::size_t r = 0; r < R; ++r) {
        if (failed[r * W + w]) continue;
        try {
          const Vector dual = KRRModel::solve(K, ytr, ridges[r]).first;
          sse[r * W + w] += (Kte * dual - yte).squaredNorm();
        } catch (const NumericalError&) {
          failed[r * W + w] = true;
        }
      }
    }
  }
  for (std::size_t r = 0; r < R; ++r)
    for (std::size_t w = 0; w < W; ++w) {
      if (failed[r * W + w]) continue;
      const double mse = sse[r * W + w] / static_cast<double>(n);
      if (mse < best.cv_mse) best = {ridges[r], widths[w], mse};
    }
  return best;
}

}  // namespace prc
