#pragma once

// Learner selection by key and a single fitting entry point.
//
//   B   Bayesian linear regression (density)
//   K   kernel ridge regression, Gaussian kernel (point only; grid-searched)
//   R   discretized label space + random forest (density)
//   N   discretized label space + softmax regression (density)
//   D   conditional kernel density estimate (also accepted as "KDE")
//   L   intercept-free least squares (point only)

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "prc/learners/blr.hpp"
#include "prc/learners/discretized.hpp"
#include "prc/learners/kde.hpp"
#include "prc/learners/krr.hpp"

namespace prc {

enum class LearnerKind { blr, krr, disc_forest, disc_softmax, kde, least_squares };

inline LearnerKind parse_learner_key(const std::string& key) {
  if (key == "B") return LearnerKind::blr;
  if (key == "K") return LearnerKind::krr;
  if (key == "R") return LearnerKind::disc_forest;
  if (key == "N") return LearnerKind::disc_softmax;
  if (key == "D" || key == "KDE") return LearnerKind::kde;
  if (key == "L") return LearnerKind::least_squares;
  throw ConfigError("unknown learner key '" + key + "'");
}

inline std::string learner_key(LearnerKind kind) {
  switch (kind) {
    case LearnerKind::blr: return "B";
    case LearnerKind::krr: return "K";
    case LearnerKind::disc_forest: return "R";
    case LearnerKind::disc_softmax: return "N";
    case LearnerKind::kde: return "D";
    case LearnerKind::least_squares: return "L";
  }
  return "?";
}

/// Whether fitted models of this kind evaluate and sample a density.
inline bool learner_has_density(LearnerKind kind) {
  return kind != LearnerKind::krr && kind != LearnerKind::least_squares;
}

struct LearnerParams {
  double prior_precision = 1.0;
  std::size_t bins = 30;
  BinSampling bin_sampling = BinSampling::jitter;
  ForestParams forest{};
  SoftmaxParams softmax{};
  std::optional<double> kde_bandwidth;
  std::vector<double> krr_ridges{1.0, 0.1, 0.01, 0.001};
  std::vector<double> krr_widths{0.01, 0.1, 1.0, 10.0, 100.0};
  std::size_t krr_inner_folds = 3;
};

inline std::shared_ptr<const ConditionalModel> fit_learner(LearnerKind kind, const Matrix& Z, std::span<const double> y,
                                                           const LearnerParams& params, std::uint64_t seed) {
  switch (kind) {
    case LearnerKind::blr:
      return std::make_shared<BLRModel>(Z, y, params.prior_precision);
    case LearnerKind::least_squares:
      return std::make_shared<LeastSquaresModel>(Z, y);
    case LearnerKind::kde:
      return std::make_shared<KDEModel>(Z, y, params.kde_bandwidth);
    case LearnerKind::krr: {
      const auto sel = krr_grid_search(Z, y, params.krr_ridges, params.krr_widths, params.krr_inner_folds, seed);
      return std::make_shared<KRRModel>(Z, y, sel.ridge, sel.kernel_width);
    }
    case LearnerKind::disc_forest:
    case LearnerKind::disc_softmax: {
      Binner binner(y, params.bins);
      const auto labels = bin_labels(binner, y);
      const auto ck = kind == LearnerKind::disc_forest ? ClassifierKind::random_forest : ClassifierKind::softmax;
      auto clf = fit_classifier(Z, labels, binner.size(), ck, params.forest, params.softmax, seed);
      return std::make_shared<DiscModel>(std::move(binner), std::move(clf), params.bin_sampling);
    }
  }
  throw ConfigError("unhandled learner kind");
}

}  // namespace prc
