#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "prc/core.hpp"

namespace prc {

enum class BinSampling { center, jitter };

/// Equal-width bins over the training range. Bins are half-open [lo, hi)
/// except the last, which is closed; values outside the range clamp to the
/// end bins.
class Binner {
 public:
  Binner(std::span<const double> y, std::size_t n_bins) {
    if (n_bins < 2) throw ArgumentError("binning needs at least 2 bins");
    if (y.empty()) throw ArgumentError("binning needs at least one value");
    auto [lo, hi] = std::minmax_element(y.begin(), y.end());
    lo_ = *lo;
    hi_ = *hi;
    if (!(hi_ > lo_)) {
      lo_ -= 0.5;
      hi_ += 0.5;
    }
    n_ = n_bins;
    edges_.resize(n_ + 1);
    for (std::size_t k = 0; k <= n_; ++k) edges_[k] = lo_ + (hi_ - lo_) * static_cast<double>(k) / static_cast<double>(n_);
    edges_.back() = hi_;
    centers_.resize(n_);
    for (std::size_t k = 0; k < n_; ++k) centers_[k] = 0.5 * (edges_[k] + edges_[k + 1]);
  }

  std::size_t size() const { return n_; }
  const std::vector<double>& edges() const { return edges_; }
  const std::vector<double>& representatives() const { return centers_; }
  double lower() const { return lo_; }
  double upper() const { return hi_; }
  double width(std::size_t k) const { return edges_[k + 1] - edges_[k]; }

  bool in_range(double y) const { return y >= lo_ && y <= hi_; }

  std::size_t index(double y) const {
    if (!(y > lo_)) return 0;
    if (!(y < hi_)) return n_ - 1;
    auto k = static_cast<std::size_t>(std::floor((y - lo_) * static_cast<double>(n_) / (hi_ - lo_)));
    k = std::min(k, n_ - 1);
    // Guard the floor against rounding at the edges.
    if (y < edges_[k]) --k;
    else if (k + 1 < n_ && y >= edges_[k + 1]) ++k;
    return k;
  }

  double value(std::size_t k, Rng& rng, BinSampling mode) const {
    if (mode == BinSampling::center) return centers_[k];
    std::uniform_real_distribution<double> u(edges_[k], edges_[k + 1]);
    return u(rng);
  }

 private:
  double lo_ = 0.0;
  double hi_ = 1.0;
  std::size_t n_ = 0;
  std::vector<double> edges_;
  std::vector<double> centers_;
};

}  // namespace prc
