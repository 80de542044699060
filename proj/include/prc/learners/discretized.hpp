#pragma once

#include <memory>
#include <random>
#include <vector>

#include "prc/learners/binner.hpp"
#include "prc/learners/forest.hpp"
#include "prc/learners/softmax.hpp"

namespace prc {

enum class ClassifierKind { random_forest, softmax };

/// Label-space discretization: a classifier over equal-width bins. The
/// density is pmf(k) / width(k) inside the training range and zero outside.
class DiscModel final : public ConditionalModel {
 public:
  DiscModel(Binner binner, std::unique_ptr<const PmfClassifier> classifier, BinSampling sampling)
      : binner_(std::move(binner)), classifier_(std::move(classifier)), sampling_(sampling) {
    if (classifier_->n_classes() != binner_.size()) throw ArgumentError("classifier and binner disagree on bin count");
  }

  std::string name() const override { return "Discretized"; }
  std::size_t input_dim() const override { return classifier_->input_dim(); }
  bool has_density() const override { return true; }

  std::vector<double> pmf(std::span<const double> z) const {
    check_input(z);
    return classifier_->pmf(z);
  }

  double log_pdf(std::span<const double> z, double y) const override {
    if (!binner_.in_range(y)) return kNegInf;
    const std::size_t k = binner_.index(y);
    const double p = pmf(z)[k];
    return p > 0.0 ? std::log(p / binner_.width(k)) : kNegInf;
  }

  double sample(std::span<const double> z, Rng& rng) const override {
    const auto p = pmf(z);
    std::discrete_distribution<std::size_t> pick(p.begin(), p.end());
    return binner_.value(pick(rng), rng, sampling_);
  }

  double predict(std::span<const double> z) const override {
    const auto p = pmf(z);
    double acc = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) acc += p[k] * binner_.representatives()[k];
    return acc;
  }

  const Binner& binner() const { return binner_; }
  const PmfClassifier& classifier() const { return *classifier_; }
  BinSampling sampling() const { return sampling_; }

 private:
  Binner binner_;
  std::unique_ptr<const PmfClassifier> classifier_;
  BinSampling sampling_;
};

/// Labels of each training value under `binner`.
inline std::vector<std::size_t> bin_labels(const Binner& binner, std::span<const double> y) {
  std::vector<std::size_t> out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) out[i] = binner.index(y[i]);
  return out;
}

inline std::unique_ptr<const PmfClassifier> fit_classifier(const Matrix& Z, std::span<const std::size_t> labels,
                                                           std::size_t n_classes, ClassifierKind kind,
                                                           const ForestParams& forest,
                                                           const SoftmaxParams& softmax, std::uint64_t seed) {
  if (kind == ClassifierKind::random_forest)
    return std::make_unique<RandomForestClassifier>(Z, labels, n_classes, forest, seed);
  return std::make_unique<SoftmaxClassifier>(Z, labels, n_classes, softmax);
}

}  // namespace prc
