#pragma once

// Regressor chains and their inference regimes: independent models, greedy
// chains, Monte-Carlo chains, and the particle-filter chain with
// ESS-triggered resampling and optional MH rejuvenation.

#include <algorithm>
#include <functional>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include "prc/data.hpp"
#include "prc/learners.hpp"
#include "prc/smc.hpp"

namespace prc {

enum class Regime { independent, greedy, monte_carlo, particle_filter };
enum class ChainMode { point, density, pf };
enum class Estimator { map, mmse, custom };

/// Parsed method key: `IR.<l>`, `RC.<l>`, `MC.<l>` or `PF.<sampler>/<evaluator>`.
struct MethodKey {
  Regime regime = Regime::independent;
  LearnerKind sampler = LearnerKind::blr;
  LearnerKind evaluator = LearnerKind::blr;
  std::string text;
};

inline MethodKey parse_method_key(const std::string& key) {
  const auto dot = key.find('.');
  if (dot == std::string::npos) throw ConfigError("method key '" + key + "' has no '.'");
  const auto prefix = key.substr(0, dot);
  const auto rest = key.substr(dot + 1);
  MethodKey out;
  out.text = key;
  if (prefix == "PF") {
    const auto slash = rest.find('/');
    if (slash == std::string::npos) throw ConfigError("PF method key needs <sampler>/<evaluator>: '" + key + "'");
    out.regime = Regime::particle_filter;
    out.sampler = parse_learner_key(rest.substr(0, slash));
    out.evaluator = parse_learner_key(rest.substr(slash + 1));
    return out;
  }
  if (prefix == "IR")
    out.regime = Regime::independent;
  else if (prefix == "RC")
    out.regime = Regime::greedy;
  else if (prefix == "MC")
    out.regime = Regime::monte_carlo;
  else
    throw ConfigError("unknown method regime '" + prefix + "' in '" + key + "'");
  out.sampler = out.evaluator = parse_learner_key(rest);
  return out;
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  return make_rng(seed, a, b)();
}

// ---------------------------------------------------------------------------
// Independent models

struct IndependentModel {
  std::vector<std::shared_ptr<const ConditionalModel>> models;

  Vector predict(std::span<const double> x) const {
    Vector out(static_cast<Eigen::Index>(models.size()));
    for (std::size_t j = 0; j < models.size(); ++j) out[static_cast<Eigen::Index>(j)] = models[j]->predict(x);
    return out;
  }
};

inline IndependentModel fit_independent(const Dataset& train, LearnerKind kind, const LearnerParams& params,
                                        std::uint64_t seed) {
  IndependentModel out;
  for (Eigen::Index j = 0; j < train.n_targets(); ++j) {
    const std::vector<double> y(train.Y.col(j).begin(), train.Y.col(j).end());
    out.models.push_back(fit_learner(kind, train.X, y, params, derive_seed(seed, static_cast<std::uint64_t>(j))));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Chain construction

struct ChainSpec {
  LearnerKind sampler = LearnerKind::blr;
  LearnerKind evaluator = LearnerKind::blr;
  ChainMode mode = ChainMode::point;
  std::vector<std::size_t> order;  ///< empty means identity
  bool sampler_uses_x = false;     ///< pf mode only
};

struct ChainStage {
  std::shared_ptr<const ConditionalModel> evaluator;  ///< also the point/density model
  std::shared_ptr<const ConditionalModel> sampler;    ///< pf mode only
};

/// Stage j models target order[j] from (x, y_order[0..j-1]).
struct ChainModel {
  std::vector<std::size_t> order;
  std::vector<ChainStage> stages;
  ChainMode mode = ChainMode::point;
  std::size_t n_features = 0;
  bool sampler_uses_x = false;

  std::size_t length() const { return stages.size(); }
};

inline std::vector<std::size_t> validated_order(std::vector<std::size_t> order, std::size_t L) {
  if (order.empty()) {
    order.resize(L);
    std::iota(order.begin(), order.end(), 0);
  }
  auto sorted = order;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i)
    if (sorted.size() != L || sorted[i] != i) throw ConfigError("chain order is not a permutation of the targets");
  return order;
}

/// Stages are trained with the true preceding targets as augmented features.
inline ChainModel fit_chain(const Dataset& train, const ChainSpec& spec, const LearnerParams& params,
                            std::uint64_t seed) {
  const auto L = static_cast<std::size_t>(train.n_targets());
  const auto D = static_cast<std::size_t>(train.n_features());
  if (spec.mode != ChainMode::point && !learner_has_density(spec.evaluator))
    throw ConfigError("learner '" + learner_key(spec.evaluator) + "' provides no density for a probabilistic chain");
  if (spec.mode == ChainMode::pf && !learner_has_density(spec.sampler))
    throw ConfigError("learner '" + learner_key(spec.sampler) + "' cannot be sampled from");

  ChainModel chain{validated_order(spec.order, L), {}, spec.mode, D, spec.sampler_uses_x};
  const auto n = train.size();
  for (std::size_t j = 0; j < L; ++j) {
    Matrix Z(n, static_cast<Eigen::Index>(D + j));
    Z.leftCols(static_cast<Eigen::Index>(D)) = train.X;
    for (std::size_t p = 0; p < j; ++p)
      Z.col(static_cast<Eigen::Index>(D + p)) = train.Y.col(static_cast<Eigen::Index>(chain.order[p]));
    const auto target_col = train.Y.col(static_cast<Eigen::Index>(chain.order[j]));
    const std::vector<double> y(target_col.begin(), target_col.end());

    ChainStage stage;
    stage.evaluator = fit_learner(spec.evaluator, Z, y, params, derive_seed(seed, j, 0));
    if (spec.mode == ChainMode::pf) {
      if (spec.sampler_uses_x && spec.sampler == spec.evaluator) {
        stage.sampler = stage.evaluator;
      } else {
        const Matrix Zs = spec.sampler_uses_x ? Z : Matrix(Z.rightCols(static_cast<Eigen::Index>(j)));
        stage.sampler = fit_learner(spec.sampler, Zs, y, params, derive_seed(seed, j, 1));
      }
    }
    chain.stages.push_back(std::move(stage));
  }
  return chain;
}

// ---------------------------------------------------------------------------
// Greedy inference

/// Each stage consumes x and the earlier point predictions as fixed values.
/// Returns predictions in dataset target order.
inline Vector predict_greedy(const ChainModel& chain, std::span<const double> x) {
  const std::size_t D = chain.n_features;
  if (x.size() != D) throw ArgumentError("greedy chain: input dimension mismatch");
  std::vector<double> z(x.begin(), x.end());
  Vector out(static_cast<Eigen::Index>(chain.length()));
  for (std::size_t j = 0; j < chain.length(); ++j) {
    const double y = chain.stages[j].evaluator->predict(std::span<const double>(z.data(), D + j));
    if (!std::isfinite(y))
      throw NumericalError("greedy chain diverged: stage " + std::to_string(j) + " (target " +
                           std::to_string(chain.order[j]) + ") produced a non-finite prediction");
    z.push_back(y);
    out[static_cast<Eigen::Index>(chain.order[j])] = y;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Particle clouds

struct ResampleEvent {
  std::size_t stage = 0;
  double log_z = 0.0;  ///< log of the unnormalized weight mass at the event
};

/// M weighted paths. `paths` columns are in dataset target order; the
/// per-stage matrices are in chain (stage) order.
///
/// Two quantities are tracked per particle:
///  - log_weights: importance weights (sampler-to-evaluator ratios, reset on
///    resampling), used for ESS, resampling and the MMSE estimator;
///  - log_density: sum over stages of the evaluator's log-density at the
///    sampled value, i.e. the path's joint density, used by MAP.
struct ParticleCloud {
  std::vector<std::size_t> order;
  Matrix paths;
  std::vector<double> log_weights;
  Matrix stage_log_weights;
  std::vector<double> resample_corrections;
  std::vector<double> log_density;
  Matrix stage_log_density;
  std::vector<double> ess_trace;
  std::vector<ResampleEvent> resample_events;
  std::vector<std::size_t> degenerate_stages;  ///< stages where uniform weights were substituted

  std::size_t particles() const { return log_weights.size(); }
  std::size_t length() const { return order.size(); }
  double log_z() const { return smc::log_sum_exp(log_weights); }

  Vector path(std::size_t m) const { return paths.row(static_cast<Eigen::Index>(m)).transpose(); }

  std::vector<std::size_t> resampled_stages() const {
    std::vector<std::size_t> out;
    for (const auto& e : resample_events) out.push_back(e.stage);
    return out;
  }
};

using PathSelector = std::function<Vector(const ParticleCloud&)>;

struct Prediction {
  Vector y_hat;
  Estimator estimator = Estimator::map;
  std::shared_ptr<const ParticleCloud> cloud;
};

/// Path with maximal joint density; ties go to the lowest particle index.
inline Vector estimate_map(const ParticleCloud& cloud) {
  std::size_t best = 0;
  for (std::size_t m = 1; m < cloud.log_density.size(); ++m)
    if (cloud.log_density[m] > cloud.log_density[best]) best = m;
  if (cloud.log_density.empty() || cloud.log_density[best] == kNegInf)
    throw DegenerateWeightsError("every path in the cloud has zero density");
  return cloud.path(best);
}

/// Self-normalized importance-weighted mean path.
inline Vector estimate_mmse(const ParticleCloud& cloud) {
  const auto w = smc::normalize(cloud.log_weights).weights;
  Vector out = Vector::Zero(cloud.paths.cols());
  for (std::size_t m = 0; m < w.size(); ++m) out += w[m] * cloud.path(m);
  return out;
}

namespace detail {

inline ParticleCloud empty_cloud(const ChainModel& chain, std::size_t M) {
  const auto L = chain.length();
  ParticleCloud c;
  c.order = chain.order;
  c.paths = Matrix::Zero(static_cast<Eigen::Index>(M), static_cast<Eigen::Index>(L));
  c.log_weights.assign(M, -std::log(static_cast<double>(M)));
  c.stage_log_weights = Matrix::Zero(static_cast<Eigen::Index>(M), static_cast<Eigen::Index>(L));
  c.resample_corrections.assign(M, -std::log(static_cast<double>(M)));
  c.log_density.assign(M, 0.0);
  c.stage_log_density = Matrix::Zero(static_cast<Eigen::Index>(M), static_cast<Eigen::Index>(L));
  c.ess_trace.assign(L, static_cast<double>(M));
  return c;
}

/// Evaluator input (x, prefix) for particle m at stage j.
inline void fill_input(std::vector<double>& z, std::span<const double> x, const ParticleCloud& c, std::size_t m,
                       std::size_t j) {
  z.assign(x.begin(), x.end());
  for (std::size_t p = 0; p < j; ++p)
    z.push_back(c.paths(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(c.order[p])));
}

inline Prediction finish(std::shared_ptr<ParticleCloud> cloud, Estimator estimator, const PathSelector& custom) {
  Prediction out;
  out.estimator = estimator;
  switch (estimator) {
    case Estimator::map: out.y_hat = estimate_map(*cloud); break;
    case Estimator::mmse: out.y_hat = estimate_mmse(*cloud); break;
    case Estimator::custom:
      if (!custom) throw ConfigError("custom estimator requested without a selector");
      out.y_hat = custom(*cloud);
      break;
  }
  if (!out.y_hat.allFinite()) throw NumericalError("estimator produced a non-finite prediction");
  out.cloud = std::move(cloud);
  return out;
}

}  // namespace detail

/// Monte-Carlo chain: each particle is an ancestral sample through the stage
/// densities, y_j ~ p_j(. | x, y_1..y_{j-1}); its joint density is the product
/// of the p_j evaluated along the path. Particles are drawn from the target
/// itself, so importance weights stay uniform.
inline Prediction predict_mc(const ChainModel& chain, std::span<const double> x, std::size_t M, Rng& rng,
                             Estimator estimator = Estimator::map, const PathSelector& custom = {}) {
  if (chain.mode == ChainMode::point) throw ConfigError("Monte-Carlo inference needs a density chain");
  if (M < 1) throw ArgumentError("Monte-Carlo inference needs M >= 1");
  if (x.size() != chain.n_features) throw ArgumentError("MC chain: input dimension mismatch");
  auto cloud = std::make_shared<ParticleCloud>(detail::empty_cloud(chain, M));
  std::vector<double> z;
  for (std::size_t j = 0; j < chain.length(); ++j) {
    const auto& model = *chain.stages[j].evaluator;
    const auto col = static_cast<Eigen::Index>(chain.order[j]);
    for (std::size_t m = 0; m < M; ++m) {
      detail::fill_input(z, x, *cloud, m, j);
      const double y = model.sample(z, rng);
      const double lp = model.log_pdf(z, y);
      const auto r = static_cast<Eigen::Index>(m);
      cloud->paths(r, col) = y;
      cloud->stage_log_density(r, static_cast<Eigen::Index>(j)) = lp;
      cloud->log_density[m] += lp;
    }
  }
  return detail::finish(std::move(cloud), estimator, custom);
}

struct PFConfig {
  std::size_t particles = 100;
  double eta = 0.1;
  smc::EssKind ess = smc::EssKind::inverse_sum;
  std::size_t mh_steps = 0;
  std::optional<double> mh_sigma;  ///< defaults to the stage's kernel bandwidth, else 0.1
  Estimator estimator = Estimator::map;
  PathSelector custom;
};

/// Particle-filter chain. Per stage: sample from the sampler f_j, multiply the
/// weight by l_j / f_j, and when ESS <= eta*M resample multinomially, reset
/// every weight to Z/M and optionally apply K MH steps targeting l_j.
inline Prediction predict_pf(const ChainModel& chain, std::span<const double> x, const PFConfig& cfg, Rng& rng) {
  if (chain.mode != ChainMode::pf) throw ConfigError("particle-filter inference needs a pf-mode chain");
  const std::size_t M = cfg.particles;
  if (M < 2) throw ArgumentError("particle filter needs M >= 2");
  if (!(cfg.eta >= 0.0 && cfg.eta <= 1.0)) throw ArgumentError("eta must lie in [0, 1]");
  if (x.size() != chain.n_features) throw ArgumentError("PF chain: input dimension mismatch");

  auto cloud = std::make_shared<ParticleCloud>(detail::empty_cloud(chain, M));
  auto& c = *cloud;
  const std::size_t D = chain.n_features;
  std::vector<double> z;
  std::vector<double> prev(M);
  for (std::size_t j = 0; j < chain.length(); ++j) {
    const auto& stage = chain.stages[j];
    const auto col = static_cast<Eigen::Index>(chain.order[j]);
    const auto sj = static_cast<Eigen::Index>(j);
    const bool shared = stage.sampler == stage.evaluator;
    prev = c.log_weights;
    for (std::size_t m = 0; m < M; ++m) {
      const auto r = static_cast<Eigen::Index>(m);
      detail::fill_input(z, x, c, m, j);
      const std::span<const double> z_eval(z);
      const std::span<const double> z_samp = chain.sampler_uses_x ? z_eval : z_eval.subspan(D);
      const double y = stage.sampler->sample(z_samp, rng);
      const double log_l = stage.evaluator->log_pdf(z_eval, y);
      double inc = 0.0;
      if (!shared) {
        const double log_f = stage.sampler->log_pdf(z_samp, y);
        inc = log_f == kNegInf ? kNegInf : log_l - log_f;
      }
      c.paths(r, col) = y;
      c.stage_log_weights(r, sj) = inc;
      c.log_weights[m] += inc;
      c.stage_log_density(r, sj) = log_l;
      c.log_density[m] += log_l;
    }
    if (std::all_of(c.log_weights.begin(), c.log_weights.end(), [](double v) { return v == kNegInf; })) {
      c.log_weights = prev;
      c.stage_log_weights.col(sj).setZero();
      c.degenerate_stages.push_back(j);
    }

    const auto norm = smc::normalize(c.log_weights);
    const double ess = smc::ess(cfg.ess, norm.weights);
    c.ess_trace[j] = ess;
    if (ess > cfg.eta * static_cast<double>(M)) continue;

    const auto res = smc::resample_multinomial(c.paths, norm.weights, norm.log_z, M, rng);
    const Matrix slw = c.stage_log_weights, sld = c.stage_log_density;
    const auto ld = c.log_density;
    for (std::size_t m = 0; m < M; ++m) {
      const auto r = static_cast<Eigen::Index>(m);
      const auto a = static_cast<Eigen::Index>(res.ancestors[m]);
      c.stage_log_weights.row(r) = slw.row(a);
      c.stage_log_density.row(r) = sld.row(a);
      c.log_density[m] = ld[res.ancestors[m]];
      c.log_weights[m] = res.log_weights[m];
      c.resample_corrections[m] = res.log_weights[m] - c.stage_log_weights.row(r).sum();
    }
    c.paths = res.paths;
    c.resample_events.push_back({j, norm.log_z});

    if (cfg.mh_steps > 0) {
      const smc::MHConfig mh{cfg.mh_steps, cfg.mh_sigma.value_or(stage.sampler->bandwidth().value_or(0.1))};
      for (std::size_t m = 0; m < M; ++m) {
        const auto r = static_cast<Eigen::Index>(m);
        detail::fill_input(z, x, c, m, j);
        const auto target = [&](double v) { return stage.evaluator->log_pdf(z, v); };
        const double start = c.paths(r, col);
        const double moved = smc::mh_rejuvenate(std::span<const double>(&start, 1), target, mh, rng).values[0];
        if (moved != start) {
          const double lp = stage.evaluator->log_pdf(z, moved);
          c.log_density[m] += lp - c.stage_log_density(r, sj);
          c.stage_log_density(r, sj) = lp;
          c.paths(r, col) = moved;
        }
      }
    }
  }
  return detail::finish(std::move(cloud), cfg.estimator, cfg.custom);
}

}  // namespace prc
