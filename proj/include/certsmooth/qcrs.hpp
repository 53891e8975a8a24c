#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "certsmooth/certify.hpp"

namespace certsmooth {

/// Radius evaluator used by the optimizer: maps (sigma, seed) to an
/// estimated certified radius. Model-backed evaluators wrap estimate_radius;
/// deterministic test curves ignore the seed.
using RadiusFn = std::function<double(double sigma, std::uint64_t seed)>;

/// Lower clamp for the left finite-difference probe, keeping sigma - tau
/// positive near the bottom of the search region.
inline constexpr double kSigmaFloor = 1e-4;

struct QcrsParams {
  double sigma_min = 0.0;
  double sigma_max = 0.0;
  double sigma0 = 0.0;
  double epsilon = 0.01;
  double tau = 0.05;
  std::uint64_t grad_samples = 500;
  double alpha = 0.001;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(sigma_min > 0.0)) throw ConfigError("sigma_min must be > 0");
    if (!(sigma_max > sigma_min)) throw ConfigError("sigma_max must exceed sigma_min");
    if (!(epsilon > 0.0)) throw ConfigError("epsilon must be > 0");
    if (!(epsilon < sigma_max - sigma_min)) {
      throw ConfigError("epsilon must be smaller than the search interval");
    }
    if (!(tau > 0.0)) throw ConfigError("tau must be > 0");
    if (!(sigma0 > 0.0)) throw ConfigError("sigma0 must be > 0");
    if (grad_samples < 1) throw ConfigError("grad_samples must be >= 1");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
  }
};

struct OptIteration {
  int t = 0;             // 1-based iteration index
  double sigma = 0.0;    // midpoint probed this iteration
  int grad_sign = 0;
  int momentum = 0;      // momentum value after the update
  double lo = 0.0;       // interval after the update
  double hi = 0.0;
  double width = 0.0;    // hi - lo, halved exactly every iteration
};

struct OptTrace {
  double sigma_min = 0.0;
  double sigma_max = 0.0;
  double sigma0 = 0.0;
  std::vector<OptIteration> iterations;
  double sigma_hat = 0.0;        // midpoint of the final interval
  double radius_hat = 0.0;       // estimate at sigma_hat in the final comparison
  double radius_sigma0 = 0.0;    // estimate at sigma0 in the final comparison
  double chosen_sigma = 0.0;
  bool rejected = false;         // true when sigma0 won the final comparison
  std::uint64_t forward_passes = 0;
};

/// Sign of the two-sided finite difference R(sigma + tau) - R(sigma - tau),
/// with the left probe clamped at kSigmaFloor. Each side gets its own
/// derived seed.
inline int gradient_sign(const RadiusFn& radius, double sigma, double tau, std::uint64_t seed) {
  double left = sigma - tau;
  if (left < kSigmaFloor) left = kSigmaFloor;
  double r_plus = radius(sigma + tau, derive_seed(seed, seeds::kGradientSide, 0));
  double r_minus = radius(left, derive_seed(seed, seeds::kGradientSide, 1));
  double diff = r_plus - r_minus;
  if (diff > 0.0) return 1;
  if (diff < 0.0) return -1;
  return 0;
}

inline RadiusFn make_radius_fn(const BaseModel& model, std::span<const double> x,
                               std::uint64_t n_est, double alpha) {
  std::vector<double> point(x.begin(), x.end());
  return [&model, point = std::move(point), n_est, alpha](double sigma, std::uint64_t seed) {
    return estimate_radius(model, point, Sigma(sigma), n_est, alpha, seed);
  };
}

inline int gradient_sign(const BaseModel& model, std::span<const double> x, Sigma sigma,
                         double tau, std::uint64_t grad_samples, double alpha,
                         std::uint64_t seed) {
  return gradient_sign(make_radius_fn(model, x, grad_samples, alpha), sigma.value(), tau, seed);
}

/// Bisection on the sign of the estimated radius gradient. The interval
/// width is halved exactly each iteration; when the probe reads a zero
/// gradient (a flat or non-certified stretch), the momentum term keeps the
/// search moving in its previous direction. After the loop the midpoint
/// sigma_hat must beat sigma0 under a fresh comparison or it is rejected,
/// so the optimizer never returns a sigma estimated worse than the default.
inline OptTrace qcrs_optimize(const RadiusFn& radius, const QcrsParams& params) {
  params.validate();
  OptTrace trace;
  trace.sigma_min = params.sigma_min;
  trace.sigma_max = params.sigma_max;
  trace.sigma0 = params.sigma0;

  double lo = params.sigma_min;
  double width = params.sigma_max - params.sigma_min;
  int momentum = 0;
  int t = 0;
  while (width > params.epsilon) {
    double half = 0.5 * width;
    double sigma = lo + half;
    ++t;
    int s = gradient_sign(radius, sigma, params.tau,
                          derive_seed(params.seed, seeds::kGradientStep, t));
    if (s > 0) {
      lo = sigma;
      momentum = 1;
    } else if (s < 0) {
      momentum = -1;
    } else if (momentum >= 0) {
      momentum = -1;
    } else {
      lo = sigma;
      momentum = 1;
    }
    width = half;
    trace.iterations.push_back({t, sigma, s, momentum, lo, lo + width, width});
  }
  trace.sigma_hat = lo + 0.5 * width;

  trace.radius_hat = radius(trace.sigma_hat, derive_seed(params.seed, seeds::kRejection, 0));
  trace.radius_sigma0 = radius(params.sigma0, derive_seed(params.seed, seeds::kRejection, 1));
  trace.rejected = !(trace.radius_hat > trace.radius_sigma0);
  trace.chosen_sigma = trace.rejected ? params.sigma0 : trace.sigma_hat;
  return trace;
}

/// Model-backed optimizer: every probe is an estimate_radius call with
/// grad_samples draws, so the loop costs 2 * grad_samples per iteration and
/// the final comparison another 2 * grad_samples.
inline OptTrace qcrs_optimize(const BaseModel& model, std::span<const double> x,
                              const QcrsParams& params) {
  auto trace = qcrs_optimize(make_radius_fn(model, x, params.grad_samples, params.alpha), params);
  trace.forward_passes =
      (2 * trace.iterations.size() + 2) * params.grad_samples;
  return trace;
}

struct GridResult {
  double best_sigma = 0.0;
  std::vector<CurvePoint> curve;
};

namespace detail {

inline void check_sigma_grid(std::span<const double> sigmas) {
  if (sigmas.empty()) throw std::invalid_argument("sigma grid is empty");
  for (std::size_t i = 0; i < sigmas.size(); ++i) {
    if (!(sigmas[i] > 0.0)) throw std::invalid_argument("sigma grid values must be > 0");
    if (i > 0 && !(sigmas[i] > sigmas[i - 1])) {
      throw std::invalid_argument("sigma grid must be strictly increasing");
    }
  }
}

}  // namespace detail

/// Exhaustive baseline: evaluates the radius at every grid sigma and returns
/// the argmax (ties to the smaller sigma) along with the full curve.
inline GridResult grid_search(const RadiusFn& radius, std::span<const double> sigmas,
                              std::uint64_t seed) {
  detail::check_sigma_grid(sigmas);
  GridResult result;
  result.curve.reserve(sigmas.size());
  double best = -1.0;
  for (std::size_t i = 0; i < sigmas.size(); ++i) {
    double r = radius(sigmas[i], derive_seed(seed, seeds::kGridPoint, i));
    result.curve.push_back({sigmas[i], r, std::numeric_limits<double>::quiet_NaN()});
    if (r > best) {
      best = r;
      result.best_sigma = sigmas[i];
    }
  }
  return result;
}

inline GridResult grid_search(const BaseModel& model, std::span<const double> x,
                              std::span<const double> sigmas, std::uint64_t n_eval, double alpha,
                              std::uint64_t seed) {
  detail::check_sigma_grid(sigmas);
  GridResult result;
  result.curve.reserve(sigmas.size());
  double best = -1.0;
  for (std::size_t i = 0; i < sigmas.size(); ++i) {
    auto est = estimate_point(model, x, Sigma(sigmas[i]), n_eval, alpha,
                              derive_seed(seed, seeds::kGridPoint, i));
    result.curve.push_back({sigmas[i], est.radius, est.pa_lower});
    if (est.radius > best) {
      best = est.radius;
      result.best_sigma = sigmas[i];
    }
  }
  return result;
}

}  // namespace certsmooth
