#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "certsmooth/qcrs.hpp"
#include "certsmooth/sampling.hpp"

namespace certsmooth {

/// Radius as a function of sigma, sampled on a strictly increasing grid.
struct SigmaRadiusCurve {
  enum class Source { mc, exact };
  std::vector<CurvePoint> samples;
  Source source = Source::exact;
  std::uint64_t mc_samples = 0;  // draws per grid point when source == mc
};

namespace detail {

inline void check_curve(const SigmaRadiusCurve& curve, std::size_t min_points,
                        const char* who) {
  if (curve.samples.size() < min_points) {
    throw std::invalid_argument(std::string(who) + ": curve needs at least " +
                                std::to_string(min_points) + " grid points");
  }
  for (std::size_t i = 1; i < curve.samples.size(); ++i) {
    if (!(curve.samples[i].sigma > curve.samples[i - 1].sigma)) {
      throw std::invalid_argument(std::string(who) + ": sigma grid must be strictly increasing");
    }
  }
}

inline std::size_t curve_argmax(const SigmaRadiusCurve& curve) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < curve.samples.size(); ++i) {
    if (curve.samples[i].radius > curve.samples[best].radius) best = i;
  }
  return best;
}

inline std::size_t nearest_index(const SigmaRadiusCurve& curve, double sigma) {
  std::size_t best = 0;
  double gap = std::abs(curve.samples[0].sigma - sigma);
  for (std::size_t i = 1; i < curve.samples.size(); ++i) {
    double g = std::abs(curve.samples[i].sigma - sigma);
    if (g < gap) {
      gap = g;
      best = i;
    }
  }
  return best;
}

}  // namespace detail

/// Monte Carlo curve: one estimate_point per grid sigma, n draws each.
inline SigmaRadiusCurve sample_curve(const BaseModel& model, std::span<const double> x,
                                     std::span<const double> sigmas, std::uint64_t n, double alpha,
                                     std::uint64_t seed) {
  detail::check_sigma_grid(sigmas);
  SigmaRadiusCurve curve;
  curve.source = SigmaRadiusCurve::Source::mc;
  curve.mc_samples = n;
  curve.samples.reserve(sigmas.size());
  for (std::size_t i = 0; i < sigmas.size(); ++i) {
    auto est = estimate_point(model, x, Sigma(sigmas[i]), n, alpha,
                              derive_seed(seed, seeds::kCurvePoint, i));
    curve.samples.push_back({sigmas[i], est.radius, est.pa_lower});
  }
  return curve;
}

/// Noise-free curve from a model's closed-form smoothed probability for a
/// fixed label. Radius is zero wherever that probability drops to 1/2.
inline SigmaRadiusCurve exact_curve(const BaseModel& model, std::span<const double> x, int label,
                                    std::span<const double> sigmas) {
  detail::check_sigma_grid(sigmas);
  SigmaRadiusCurve curve;
  curve.samples.reserve(sigmas.size());
  for (double s : sigmas) {
    Probability p = exact_pa(model, x, Sigma(s), label);
    Probability clamped(std::min(p.value(), 1.0 - 1e-15));
    curve.samples.push_back({s, certified_radius(Sigma(s), clamped).value(), p.value()});
  }
  return curve;
}

/// Deterministic curve from an arbitrary function, for analysis and tests.
inline SigmaRadiusCurve curve_from_function(const std::function<double(double)>& f,
                                            std::span<const double> sigmas) {
  detail::check_sigma_grid(sigmas);
  SigmaRadiusCurve curve;
  curve.samples.reserve(sigmas.size());
  for (double s : sigmas) {
    curve.samples.push_back({s, f(s), std::numeric_limits<double>::quiet_NaN()});
  }
  return curve;
}

inline double concavity_tolerance(const SigmaRadiusCurve& curve) {
  double peak = 0.0;
  for (const auto& p : curve.samples) peak = std::max(peak, p.radius);
  return 1e-6 * peak;
}

/// True when every three-point second divided difference is <= tol, i.e. the
/// sampled curve shows no convex kink beyond the tolerance. Handles
/// non-uniform grids. Requires at least three points.
inline bool concavity_check(const SigmaRadiusCurve& curve, double tol) {
  detail::check_curve(curve, 3, "concavity_check");
  const auto& s = curve.samples;
  for (std::size_t i = 1; i + 1 < s.size(); ++i) {
    double h1 = s[i].sigma - s[i - 1].sigma;
    double h2 = s[i + 1].sigma - s[i].sigma;
    double d2 = 2.0 * (h1 * s[i + 1].radius - (h1 + h2) * s[i].radius + h2 * s[i - 1].radius) /
                (h1 * h2 * (h1 + h2));
    if (d2 > tol) return false;
  }
  return true;
}

inline bool concavity_check(const SigmaRadiusCurve& curve) {
  return concavity_check(curve, concavity_tolerance(curve));
}

/// Quasiconcavity screen around a presumed optimum. upsilon_minus is the
/// fraction of increasing steps left of sigma_star, upsilon_plus the
/// fraction of decreasing steps right of it; both restricted to the region
/// where the radius is positive. Steps with exactly zero difference carry
/// no directional evidence and are skipped. A side with no evaluated steps
/// is vacuously 1. This is a screen on a finite grid: it can certify a
/// violation but can only ever suggest quasiconcavity.
struct SqcReport {
  double sigma_star = 0.0;
  double upsilon_minus = 1.0;
  double upsilon_plus = 1.0;
  int n_left = 0;
  int n_right = 0;
  bool quasiconcave = true;
  bool concave = false;
  bool degenerate = false;  // every sampled radius was zero
};

inline SqcReport sqc_estimate(const SigmaRadiusCurve& curve, double sigma_star) {
  detail::check_curve(curve, 2, "sqc_estimate");
  const auto& s = curve.samples;
  std::size_t star = detail::nearest_index(curve, sigma_star);

  SqcReport report;
  report.sigma_star = s[star].sigma;
  report.degenerate = std::all_of(s.begin(), s.end(),
                                  [](const CurvePoint& p) { return p.radius <= 0.0; });
  int pos_left = 0, neg_right = 0;
  if (!report.degenerate) {
    for (std::size_t i = 0; i + 1 < s.size(); ++i) {
      if (std::max(s[i].radius, s[i + 1].radius) <= 0.0) continue;
      double d = s[i + 1].radius - s[i].radius;
      if (d == 0.0) continue;
      if (i + 1 <= star) {
        ++report.n_left;
        if (d > 0.0) ++pos_left;
      } else {
        ++report.n_right;
        if (d < 0.0) ++neg_right;
      }
    }
  }
  report.upsilon_minus = report.n_left > 0 ? static_cast<double>(pos_left) / report.n_left : 1.0;
  report.upsilon_plus = report.n_right > 0 ? static_cast<double>(neg_right) / report.n_right : 1.0;
  report.quasiconcave = report.upsilon_minus == 1.0 && report.upsilon_plus == 1.0;
  report.concave = s.size() >= 3 && concavity_check(curve);
  return report;
}

inline SqcReport sqc_estimate(const SigmaRadiusCurve& curve) {
  detail::check_curve(curve, 2, "sqc_estimate");
  return sqc_estimate(curve, curve.samples[detail::curve_argmax(curve)].sigma);
}

/// Monte Carlo variant: instead of reading slopes off the sampled curve, a
/// fresh finite-difference gradient sign is estimated at every grid point
/// with a positive sampled radius (sigma_star itself excluded).
inline SqcReport sqc_estimate_mc(const BaseModel& model, std::span<const double> x,
                                 const SigmaRadiusCurve& curve, double sigma_star, double tau,
                                 std::uint64_t grad_samples, double alpha, std::uint64_t seed) {
  detail::check_curve(curve, 2, "sqc_estimate_mc");
  const auto& s = curve.samples;
  std::size_t star = detail::nearest_index(curve, sigma_star);

  SqcReport report;
  report.sigma_star = s[star].sigma;
  report.degenerate = std::all_of(s.begin(), s.end(),
                                  [](const CurvePoint& p) { return p.radius <= 0.0; });
  auto radius = make_radius_fn(model, x, grad_samples, alpha);
  int pos_left = 0, neg_right = 0;
  if (!report.degenerate) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (i == star || s[i].radius <= 0.0) continue;
      int sign = gradient_sign(radius, s[i].sigma, tau, derive_seed(seed, seeds::kSqcPoint, i));
      if (sign == 0) continue;
      if (i < star) {
        ++report.n_left;
        if (sign > 0) ++pos_left;
      } else {
        ++report.n_right;
        if (sign < 0) ++neg_right;
      }
    }
  }
  report.upsilon_minus = report.n_left > 0 ? static_cast<double>(pos_left) / report.n_left : 1.0;
  report.upsilon_plus = report.n_right > 0 ? static_cast<double>(neg_right) / report.n_right : 1.0;
  report.quasiconcave = report.upsilon_minus == 1.0 && report.upsilon_plus == 1.0;
  report.concave = s.size() >= 3 && concavity_check(curve);
  return report;
}

/// Checks an optimizer trace against the bisection error bound
/// |sigma_t - sigma_star| <= (sigma_max - sigma_min) / 2^t. margins[t-1]
/// holds the slack at iteration t; a small negative tolerance absorbs
/// midpoint rounding.
struct ConvergenceReport {
  bool ok = true;
  int first_violation = 0;  // iteration index, 0 when none
  std::vector<double> margins;
};

inline ConvergenceReport convergence_trace_check(const OptTrace& trace, double sigma_star) {
  ConvergenceReport report;
  double width0 = trace.sigma_max - trace.sigma_min;
  report.margins.reserve(trace.iterations.size());
  for (const auto& it : trace.iterations) {
    double bound = std::ldexp(width0, -it.t);
    double margin = bound - std::abs(it.sigma - sigma_star);
    report.margins.push_back(margin);
    if (report.ok && margin < -1e-12) {
      report.ok = false;
      report.first_violation = it.t;
    }
  }
  return report;
}

}  // namespace certsmooth
