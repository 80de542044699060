#pragma once

#include <optional>
#include <span>
#include <string>

#include "prc/core.hpp"

namespace prc {

/// A fitted model for one target given an augmented input z = (x, y_1..y_{j-1}).
/// Point regressors only implement predict(); conditional densities also
/// evaluate and sample.
class ConditionalModel {
 public:
  virtual ~ConditionalModel() = default;

  virtual std::string name() const = 0;
  virtual std::size_t input_dim() const = 0;

  /// Point prediction (the conditional mean for density models).
  virtual double predict(std::span<const double> z) const = 0;

  virtual bool has_density() const { return false; }

  virtual double log_pdf(std::span<const double> /*z*/, double /*y*/) const {
    throw ConfigError(name() + " does not provide a density");
  }

  virtual double sample(std::span<const double> /*z*/, Rng& /*rng*/) const {
    throw ConfigError(name() + " does not support sampling");
  }

  /// Kernel bandwidth, for models that have one.
  virtual std::optional<double> bandwidth() const { return std::nullopt; }

  double pdf(std::span<const double> z, double y) const { return std::exp(log_pdf(z, y)); }

 protected:
  void check_input(std::span<const double> z) const {
    if (z.size() != input_dim())
      throw ArgumentError(name() + ": expected input of dimension " + std::to_string(input_dim()) +
                          ", got " + std::to_string(z.size()));
  }
};

}  // namespace prc
