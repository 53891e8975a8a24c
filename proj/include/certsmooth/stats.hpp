#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "certsmooth/types.hpp"

namespace certsmooth {

/// Standard normal CDF.
inline double normal_cdf(double x) {
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

/// Standard normal density.
inline double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

/// Inverse standard normal CDF. Rational initial guess (Acklam) followed by
/// one Halley step against normal_cdf, which brings |Phi(z) - p| below 1e-12
/// across (0, 1). Throws std::domain_error outside the open interval.
inline double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::domain_error("normal_quantile requires p in (0, 1)");
  }

  static constexpr double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                  -2.759285104469687e+02, 1.383577518672690e+02,
                                  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                  -1.556989798598866e+02, 6.680131188771972e+01,
                                  -1.328068155288572e+01};
  static constexpr double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                  -2.400758277161838e+00, -2.549732539343734e+00,
                                  4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                  2.445134137142996e+00, 3.754408661907416e+00};
  static constexpr double p_low = 0.02425;

  double z;
  if (p < p_low) {
    double q = std::sqrt(-2.0 * std::log(p));
    z = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    double q = p - 0.5;
    double r = q * q;
    z = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    double q = std::sqrt(-2.0 * std::log1p(-p));
    z = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }

  double density = normal_pdf(z);
  if (density > 0.0) {
    double err = normal_cdf(z) - p;
    double u = err / density;
    double step = u / (1.0 + 0.5 * z * u);
    if (std::isfinite(step)) z -= step;
  }
  return z;
}

namespace detail {

/// log(exp(la) + exp(lb)) without leaving log space.
inline double log_add_exp(double la, double lb) {
  if (la < lb) std::swap(la, lb);
  double diff = lb - la;
  if (diff < -45.0) return la;
  return la + std::log1p(std::exp(diff));
}

/// log Pr[Bin(n, p) >= k] for k >= 1. Terms are accumulated from j = k upward
/// with an incremental ratio; the sum stops once past the mode with the
/// current term 45 nats below the running total.
inline double log_binomial_upper_tail(std::uint64_t k, std::uint64_t n, double p) {
  if (p <= 0.0) return -std::numeric_limits<double>::infinity();
  if (p >= 1.0) return 0.0;
  double log_p = std::log(p);
  double log_1mp = std::log1p(-p);
  double kd = static_cast<double>(k);
  double nd = static_cast<double>(n);
  double log_term = std::lgamma(nd + 1.0) - std::lgamma(kd + 1.0) - std::lgamma(nd - kd + 1.0) +
                    kd * log_p + (nd - kd) * log_1mp;
  double log_sum = log_term;
  double log_odds = log_p - log_1mp;
  for (std::uint64_t j = k; j < n; ++j) {
    double log_ratio = std::log((nd - static_cast<double>(j)) / (static_cast<double>(j) + 1.0)) +
                       log_odds;
    log_term += log_ratio;
    log_sum = log_add_exp(log_sum, log_term);
    if (log_ratio < 0.0 && log_term < log_sum - 45.0) break;
  }
  return std::min(log_sum, 0.0);
}

}  // namespace detail

/// One-sided Clopper-Pearson lower confidence bound: the largest p with
/// Pr[Bin(n, p) >= k] <= alpha, located by bisection on the exact binomial
/// tail to an interval of width 1e-12. Returns 0 when k == 0.
inline Probability clopper_pearson_lower(std::uint64_t k, std::uint64_t n, double alpha) {
  if (n < 1) throw std::invalid_argument("clopper_pearson_lower requires n >= 1");
  if (k > n) throw std::invalid_argument("clopper_pearson_lower requires k <= n");
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw std::invalid_argument("clopper_pearson_lower requires alpha in (0, 1)");
  }
  if (k == 0) return Probability(0.0);

  double log_alpha = std::log(alpha);
  double lo = 0.0;
  double hi = 1.0;
  while (hi - lo > 1e-12) {
    double mid = 0.5 * (lo + hi);
    if (detail::log_binomial_upper_tail(k, n, mid) <= log_alpha) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return Probability(lo);
}

/// Certified L2 radius sigma * Phi^{-1}(pa_lower); zero when pa_lower <= 1/2.
/// pa_lower == 1 is rejected: it cannot arise from a finite-sample bound.
inline Radius certified_radius(Sigma sigma, Probability pa_lower) {
  double p = pa_lower.value();
  if (p >= 1.0) {
    throw std::domain_error("certified_radius requires pa_lower < 1");
  }
  if (p <= 0.5) return Radius(0.0);
  p = std::min(p, 1.0 - 1e-15);
  return Radius(sigma.value() * normal_quantile(p));
}

}  // namespace certsmooth
