#pragma once

// Reference computations used by the test suites: quadrature, normal CDF,
// Kolmogorov-Smirnov distance and brute-force MAP enumeration.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace oracle {

inline double simpson(const std::function<double(double)>& f, double a, double b, double fa, double fm, double fb,
                      double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol) return left + right + (left + right - whole) / 15.0;
  return simpson(f, a, m, fa, flm, fm, left, tol / 2, depth - 1) + simpson(f, m, b, fm, frm, fb, right, tol / 2, depth - 1);
}

/// Adaptive Simpson over [a, b], split into `pieces` panels so narrow peaks are not missed.
inline double integrate(const std::function<double(double)>& f, double a, double b, double tol = 1e-10,
                        int pieces = 400) {
  double total = 0.0;
  const double h = (b - a) / pieces;
  for (int i = 0; i < pieces; ++i) {
    const double lo = a + i * h, hi = lo + h, mid = 0.5 * (lo + hi);
    const double flo = f(lo), fmid = f(mid), fhi = f(hi);
    total += simpson(f, lo, hi, flo, fmid, fhi, h / 6.0 * (flo + 4.0 * fmid + fhi), tol / pieces, 30);
  }
  return total;
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

/// sup |F_n - F| for samples against a CDF.
inline double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf) {
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double F = cdf(samples[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - F, F - static_cast<double>(i) / n});
  }
  return d;
}

/// Tabulated CDF of a density on a grid, for KS checks against numeric integration.
struct GridCdf {
  double lo, step;
  std::vector<double> cum;

  GridCdf(const std::function<double(double)>& pdf, double a, double b, int n) : lo(a), step((b - a) / n), cum(n + 1) {
    cum[0] = 0.0;
    double prev = pdf(a);
    for (int i = 1; i <= n; ++i) {
      const double x = a + i * step, mid = x - 0.5 * step, cur = pdf(x);
      cum[i] = cum[i - 1] + step / 6.0 * (prev + 4.0 * pdf(mid) + cur);
      prev = cur;
    }
  }

  double operator()(double x) const {
    if (x <= lo) return 0.0;
    const double pos = (x - lo) / step;
    const auto i = static_cast<std::size_t>(pos);
    if (i + 1 >= cum.size()) return cum.back();
    const double t = pos - static_cast<double>(i);
    return cum[i] + t * (cum[i + 1] - cum[i]);
  }
};

}  // namespace oracle
