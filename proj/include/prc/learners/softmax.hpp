#pragma once

#include <cmath>
#include <vector>

#include "prc/learners/forest.hpp"

namespace prc {

struct SoftmaxParams {
  std::size_t iterations = 300;
  double learning_rate = 0.5;
  double l2 = 1e-4;
};

/// Multinomial logistic regression fitted by full-batch gradient descent.
class SoftmaxClassifier final : public PmfClassifier {
 public:
  SoftmaxClassifier(const Matrix& Z, std::span<const std::size_t> labels, std::size_t n_classes,
                    const SoftmaxParams& params)
      : n_classes_(n_classes), dim_(static_cast<std::size_t>(Z.cols())) {
    const Eigen::Index n = Z.rows();
    const auto K = static_cast<Eigen::Index>(n_classes);
    if (n < 1) throw ArgumentError("softmax needs at least one training instance");
    if (static_cast<Eigen::Index>(labels.size()) != n) throw ArgumentError("softmax: label count mismatch");

    Eigen::MatrixXd phi(n, Z.cols() + 1);
    phi.col(0).setOnes();
    phi.rightCols(Z.cols()) = Z;
    Eigen::MatrixXd onehot = Eigen::MatrixXd::Zero(n, K);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (labels[static_cast<std::size_t>(i)] >= n_classes) throw ArgumentError("softmax: label out of range");
      onehot(i, static_cast<Eigen::Index>(labels[static_cast<std::size_t>(i)])) = 1.0;
    }
    // Intercepts start at smoothed log class frequencies.
    weights_ = Eigen::MatrixXd::Zero(K, phi.cols());
    const Vector freq = onehot.colwise().sum().transpose();
    for (Eigen::Index k = 0; k < K; ++k)
      weights_(k, 0) = std::log((freq[k] + 0.5) / (static_cast<double>(n) + 0.5 * static_cast<double>(K)));

    for (std::size_t it = 0; it < params.iterations; ++it) {
      Eigen::MatrixXd probs = phi * weights_.transpose();
      softmax_rows(probs);
      const Eigen::MatrixXd grad = (probs - onehot).transpose() * phi / static_cast<double>(n);
      weights_ -= params.learning_rate * (grad + params.l2 * weights_);
    }
  }

  std::size_t n_classes() const override { return n_classes_; }
  std::size_t input_dim() const override { return dim_; }

  std::vector<double> pmf(std::span<const double> z) const override {
    if (z.size() != dim_) throw ArgumentError("softmax: input dimension mismatch");
    Eigen::RowVectorXd phi(static_cast<Eigen::Index>(dim_ + 1));
    phi[0] = 1.0;
    for (std::size_t i = 0; i < dim_; ++i) phi[static_cast<Eigen::Index>(i + 1)] = z[i];
    Eigen::MatrixXd logits = phi * weights_.transpose();
    softmax_rows(logits);
    std::vector<double> out(n_classes_);
    double total = 0.0;
    for (std::size_t k = 0; k < n_classes_; ++k) total += out[k] = logits(0, static_cast<Eigen::Index>(k));
    for (auto& v : out) v /= total;
    return out;
  }

 private:
  static void softmax_rows(Eigen::MatrixXd& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      m.row(i).array() -= m.row(i).maxCoeff();
      m.row(i) = m.row(i).array().exp().matrix();
      m.row(i) /= m.row(i).sum();
    }
  }

  std::size_t n_classes_;
  std::size_t dim_;
  Eigen::MatrixXd weights_;
};

}  // namespace prc
