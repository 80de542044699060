#pragma once

// Bagged CART classification trees (Gini splits) producing a class pmf.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numeric>
#include <random>
#include <vector>

#include "prc/learners/model.hpp"

namespace prc {

/// Any classifier that yields a probability mass function over its classes.
class PmfClassifier {
 public:
  virtual ~PmfClassifier() = default;
  virtual std::size_t n_classes() const = 0;
  virtual std::size_t input_dim() const = 0;
  virtual std::vector<double> pmf(std::span<const double> z) const = 0;
};

struct ForestParams {
  std::size_t trees = 100;
  std::size_t max_features = 0;  ///< 0 selects floor(sqrt(d)), at least 1
  std::size_t min_samples_leaf = 1;
  std::size_t max_depth = 0;  ///< 0 means unlimited
  bool bootstrap = true;
};

class DecisionTree {
 public:
  DecisionTree(const Matrix& Z, std::span<const std::size_t> labels, std::size_t n_classes,
               std::vector<std::uint32_t> sample, const ForestParams& params, Rng& rng)
      : n_classes_(n_classes) {
    struct Task {
      std::uint32_t node;
      std::vector<std::uint32_t> idx;
      std::size_t depth;
    };
    const auto d = static_cast<std::size_t>(Z.cols());
    const std::size_t max_features =
        params.max_features ? std::min(params.max_features, d)
                            : std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(d))));
    std::vector<std::size_t> features(d);
    std::iota(features.begin(), features.end(), 0);
    std::vector<std::pair<double, std::uint32_t>> sorted;
    std::vector<double> left_counts(n_classes), counts(n_classes);

    nodes_.push_back({});
    std::vector<Task> stack;
    stack.push_back({0, std::move(sample), 0});
    while (!stack.empty()) {
      Task task = std::move(stack.back());
      stack.pop_back();
      std::fill(counts.begin(), counts.end(), 0.0);
      for (auto i : task.idx) counts[labels[i]] += 1.0;
      const auto n = static_cast<double>(task.idx.size());
      const bool pure = std::count_if(counts.begin(), counts.end(), [](double c) { return c > 0.0; }) <= 1;
      const bool depth_limited = params.max_depth && task.depth >= params.max_depth;
      int best_feature = -1;
      double best_threshold = 0.0;
      if (!pure && !depth_limited && task.idx.size() >= 2 * params.min_samples_leaf && d > 0) {
        std::shuffle(features.begin(), features.end(), rng);
        double best_score = -1.0;
        for (std::size_t fi = 0; fi < d; ++fi) {
          if (fi >= max_features && best_feature >= 0) break;
          const std::size_t f = features[fi];
          sorted.clear();
          for (auto i : task.idx) sorted.emplace_back(Z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(f)), i);
          std::sort(sorted.begin(), sorted.end());
          if (sorted.front().first == sorted.back().first) continue;
          std::fill(left_counts.begin(), left_counts.end(), 0.0);
          double sq_left = 0.0;
          double sq_right = 0.0;
          for (double c : counts) sq_right += c * c;
          for (std::size_t pos = 0; pos + 1 < sorted.size(); ++pos) {
            const auto c = labels[sorted[pos].second];
            sq_left += 2.0 * left_counts[c] + 1.0;
            sq_right -= 2.0 * (counts[c] - left_counts[c]) - 1.0;
            left_counts[c] += 1.0;
            const std::size_t n_left = pos + 1;
            const std::size_t n_right = sorted.size() - n_left;
            if (sorted[pos].first == sorted[pos + 1].first) continue;
            if (n_left < params.min_samples_leaf || n_right < params.min_samples_leaf) continue;
            // Maximizing this is equivalent to minimizing weighted Gini impurity.
            const double score = sq_left / static_cast<double>(n_left) + sq_right / static_cast<double>(n_right);
            if (score > best_score) {
              best_score = score;
              best_feature = static_cast<int>(f);
              best_threshold = 0.5 * (sorted[pos].first + sorted[pos + 1].first);
              if (!(best_threshold < sorted[pos + 1].first)) best_threshold = sorted[pos].first;
            }
          }
        }
      }
      if (best_feature < 0) {
        nodes_[task.node].leaf = static_cast<std::uint32_t>(leaf_pmfs_.size() / n_classes_);
        for (double c : counts) leaf_pmfs_.push_back(c / n);
        continue;
      }
      std::vector<std::uint32_t> left, right;
      for (auto i : task.idx)
        (Z(static_cast<Eigen::Index>(i), best_feature) <= best_threshold ? left : right).push_back(i);
      const auto l = static_cast<std::uint32_t>(nodes_.size());
      nodes_.push_back({});
      nodes_.push_back({});
      auto& node = nodes_[task.node];
      node.feature = best_feature;
      node.threshold = best_threshold;
      node.left = l;
      node.right = l + 1;
      stack.push_back({l + 1, std::move(right), task.depth + 1});
      stack.push_back({l, std::move(left), task.depth + 1});
    }
  }

  /// Pointer to the n_classes pmf entries of the leaf reached by z.
  const double* leaf_pmf(std::span<const double> z) const {
    std::uint32_t cur = 0;
    while (nodes_[cur].feature >= 0) {
      const auto& node = nodes_[cur];
      cur = z[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right;
    }
    return leaf_pmfs_.data() + static_cast<std::size_t>(nodes_[cur].leaf) * n_classes_;
  }

  std::size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    int feature = -1;
    double threshold = 0.0;
    std::uint32_t left = 0;
    std::uint32_t right = 0;
    std::uint32_t leaf = 0;
  };
  std::size_t n_classes_;
  std::vector<Node> nodes_;
  std::vector<double> leaf_pmfs_;
};

/// Random forest: the pmf is the average of the trees' leaf class frequencies.
class RandomForestClassifier final : public PmfClassifier {
 public:
  RandomForestClassifier(const Matrix& Z, std::span<const std::size_t> labels, std::size_t n_classes,
                         const ForestParams& params, std::uint64_t seed)
      : n_classes_(n_classes), dim_(static_cast<std::size_t>(Z.cols())) {
    const auto n = static_cast<std::size_t>(Z.rows());
    if (n < 1) throw ArgumentError("random forest needs at least one training instance");
    if (labels.size() != n) throw ArgumentError("random forest: label count mismatch");
    if (params.trees < 1) throw ArgumentError("random forest needs at least one tree");
    for (auto c : labels)
      if (c >= n_classes) throw ArgumentError("random forest: label out of range");
    trees_.reserve(params.trees);
    for (std::size_t t = 0; t < params.trees; ++t) {
      Rng rng = make_rng(seed, t);
      std::vector<std::uint32_t> sample(n);
      if (params.bootstrap) {
        std::uniform_int_distribution<std::uint32_t> pick(0, static_cast<std::uint32_t>(n - 1));
        for (auto& s : sample) s = pick(rng);
      } else {
        std::iota(sample.begin(), sample.end(), 0u);
      }
      trees_.emplace_back(Z, labels, n_classes, std::move(sample), params, rng);
    }
  }

  std::size_t n_classes() const override { return n_classes_; }
  std::size_t input_dim() const override { return dim_; }
  std::size_t tree_count() const { return trees_.size(); }

  std::vector<double> pmf(std::span<const double> z) const override {
    if (z.size() != dim_) throw ArgumentError("random forest: input dimension mismatch");
    std::vector<double> out(n_classes_, 0.0);
    for (const auto& tree : trees_) {
      const double* leaf = tree.leaf_pmf(z);
      for (std::size_t k = 0; k < n_classes_; ++k) out[k] += leaf[k];
    }
    const double total = std::accumulate(out.begin(), out.end(), 0.0);
    for (auto& v : out) v /= total;
    return out;
  }

 private:
  std::size_t n_classes_;
  std::size_t dim_;
  std::vector<DecisionTree> trees_;
};

}  // namespace prc
