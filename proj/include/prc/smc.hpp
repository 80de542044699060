#pragma once

// Sequential Monte Carlo primitives: stable log-weight normalization,
// effective-sample-size estimators, multinomial resampling with weight
// reset, and parallel random-walk Metropolis-Hastings rejuvenation.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "prc/core.hpp"

namespace prc::smc {

struct NormalizedWeights {
  std::vector<double> weights;  ///< sums to one
  double log_z = 0.0;           ///< log of the unnormalized total
};

inline double log_sum_exp(std::span<const double> log_w) {
  double hi = kNegInf;
  for (double v : log_w) {
    if (std::isnan(v)) throw NumericalError("NaN log-weight");
    hi = std::max(hi, v);
  }
  if (hi == kNegInf) return kNegInf;
  if (hi == std::numeric_limits<double>::infinity()) throw NumericalError("infinite log-weight");
  double acc = 0.0;
  for (double v : log_w) acc += std::exp(v - hi);
  return hi + std::log(acc);
}

inline NormalizedWeights normalize(std::span<const double> log_w) {
  const double log_z = log_sum_exp(log_w);
  if (log_z == kNegInf) throw DegenerateWeightsError("all log-weights are -inf");
  NormalizedWeights out{std::vector<double>(log_w.size()), log_z};
  for (std::size_t i = 0; i < log_w.size(); ++i) out.weights[i] = std::exp(log_w[i] - log_z);
  return out;
}

namespace detail {
inline bool uniform(std::span<const double> w) {
  const auto [lo, hi] = std::minmax_element(w.begin(), w.end());
  return *lo == *hi;
}
inline double clamp_ess(double ess, std::size_t m) {
  return std::clamp(ess, 1.0, static_cast<double>(m));
}
}  // namespace detail

/// 1 / sum(w^2) over normalized weights.
inline double ess_inverse_sum(std::span<const double> w) {
  if (w.empty()) throw ArgumentError("ESS of an empty weight vector");
  if (detail::uniform(w)) return static_cast<double>(w.size());
  double sq = 0.0;
  for (double v : w) sq += v * v;
  return detail::clamp_ess(1.0 / sq, w.size());
}

/// 1 / max(w) over normalized weights.
inline double ess_inverse_max(std::span<const double> w) {
  if (w.empty()) throw ArgumentError("ESS of an empty weight vector");
  if (detail::uniform(w)) return static_cast<double>(w.size());
  return detail::clamp_ess(1.0 / *std::max_element(w.begin(), w.end()), w.size());
}

enum class EssKind { inverse_sum, inverse_max };

inline double ess(EssKind kind, std::span<const double> w) {
  return kind == EssKind::inverse_sum ? ess_inverse_sum(w) : ess_inverse_max(w);
}

/// Multinomial draw of `count` ancestor indices, with replacement.
inline std::vector<std::size_t> draw_ancestors(std::span<const double> w, std::size_t count, Rng& rng) {
  std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
  std::vector<std::size_t> out(count);
  for (auto& a : out) a = pick(rng);
  return out;
}

struct Resampled {
  Matrix paths;
  std::vector<double> log_weights;  ///< every entry equals log_z - ln(M)
  std::vector<std::size_t> ancestors;
};

/// Rows of `paths` are particles. After the draw every weight is reset to Z/M,
/// which keeps the total unnormalized mass unchanged.
inline Resampled resample_multinomial(const Matrix& paths, std::span<const double> normalized_weights,
                                      double log_z, std::size_t m, Rng& rng) {
  if (static_cast<std::size_t>(paths.rows()) != normalized_weights.size())
    throw ArgumentError("paths and weights disagree on particle count");
  Resampled out{Matrix(m, paths.cols()),
                std::vector<double>(m, log_z - std::log(static_cast<double>(m))),
                draw_ancestors(normalized_weights, m, rng)};
  for (std::size_t i = 0; i < m; ++i)
    out.paths.row(static_cast<Eigen::Index>(i)) = paths.row(static_cast<Eigen::Index>(out.ancestors[i]));
  return out;
}

struct MHConfig {
  std::size_t steps = 0;      ///< K
  double proposal_std = 0.1;  ///< Gaussian random-walk scale
};

/// log of min(1, pi(z) q(y|z) / (pi(y) q(z|y))); a -inf target at z always rejects.
inline double mh_log_acceptance(double log_pi_proposed, double log_pi_current, double log_q_reverse,
                                double log_q_forward) {
  if (log_pi_proposed == kNegInf) return kNegInf;
  if (log_pi_current == kNegInf) return 0.0;
  return std::min(0.0, log_pi_proposed + log_q_reverse - log_pi_current - log_q_forward);
}

struct MHResult {
  std::vector<double> values;
  std::size_t accepted = 0;
  std::size_t proposed = 0;
};

/// K random-walk MH steps applied independently to each value. The Gaussian
/// proposal is symmetric so the q terms cancel in the ratio.
inline MHResult mh_rejuvenate(std::span<const double> values,
                              const std::function<double(double)>& target_logpdf, const MHConfig& cfg,
                              Rng& rng) {
  if (!(cfg.proposal_std > 0.0)) throw ArgumentError("MH proposal_std must be positive");
  MHResult out{{values.begin(), values.end()}, 0, 0};
  if (cfg.steps == 0) return out;
  std::normal_distribution<double> step(0.0, cfg.proposal_std);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (auto& y : out.values) {
    double log_pi_y = target_logpdf(y);
    for (std::size_t k = 0; k < cfg.steps; ++k) {
      const double z = y + step(rng);
      const double log_pi_z = target_logpdf(z);
      const double log_alpha = mh_log_acceptance(log_pi_z, log_pi_y, 0.0, 0.0);
      ++out.proposed;
      if (std::log(unif(rng)) < log_alpha) {
        y = z;
        log_pi_y = log_pi_z;
        ++out.accepted;
      }
    }
  }
  return out;
}

}  // namespace prc::smc
