#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "certsmooth/sampling.hpp"
#include "certsmooth/stats.hpp"
#include "certsmooth/types.hpp"

namespace certsmooth {

struct CertParams {
  double alpha = 0.001;
  std::uint64_t n0 = 100;
  std::uint64_t n = 100000;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
    if (n0 < 1) throw ConfigError("n0 must be >= 1");
    if (n < 1) throw ConfigError("n must be >= 1");
  }
};

/// Result of a certification attempt. When certified is false the run
/// abstained and only forward_passes is meaningful; an abstention counts as
/// radius 0 in every aggregate.
struct CertOutcome {
  bool certified = false;
  int label = -1;
  double pa_lower = 0.0;
  double radius = 0.0;
  std::uint64_t forward_passes = 0;

  static CertOutcome abstain(std::uint64_t passes) { return {false, -1, 0.0, 0.0, passes}; }
};

/// A single-phase estimate at one sigma: plurality class, its lower
/// confidence bound, and the implied radius (0 when pa_lower <= 1/2).
struct PointEstimate {
  int label = -1;
  double pa_lower = 0.0;
  double radius = 0.0;
};

inline PointEstimate estimate_point(const BaseModel& model, std::span<const double> x, Sigma sigma,
                                    std::uint64_t n_est, double alpha, std::uint64_t seed) {
  auto counts = sample_class_counts(model, x, sigma, n_est, seed);
  auto it = std::max_element(counts.begin(), counts.end());
  int label = static_cast<int>(it - counts.begin());
  Probability pl = clopper_pearson_lower(*it, n_est, alpha);
  return {label, pl.value(), certified_radius(sigma, pl).value()};
}

/// Non-certifying radius estimate used by the optimizer and diagnostics:
/// picks the plurality class from n_est draws and returns
/// max(0, sigma * Phi^{-1}(pa_lower)). Not a certificate; the selection and
/// the bound share one sample.
inline double estimate_radius(const BaseModel& model, std::span<const double> x, Sigma sigma,
                              std::uint64_t n_est, double alpha, std::uint64_t seed) {
  return estimate_point(model, x, sigma, n_est, alpha, seed).radius;
}

/// Two-phase Monte Carlo certification: n0 draws select the candidate class
/// (ties to the lowest index), n fresh draws bound its probability, and the
/// point is certified iff the bound exceeds 1/2. Total forward passes are
/// n0 + n regardless of outcome.
inline CertOutcome certify(const BaseModel& model, std::span<const double> x, Sigma sigma,
                           const CertParams& params) {
  params.validate();
  auto counts0 = sample_class_counts(model, x, sigma, params.n0,
                                     derive_seed(params.seed, seeds::kCertifySelect));
  auto it = std::max_element(counts0.begin(), counts0.end());
  int candidate = static_cast<int>(it - counts0.begin());

  auto counts = sample_class_counts(model, x, sigma, params.n,
                                    derive_seed(params.seed, seeds::kCertifyEstimate));
  std::uint64_t k = counts[static_cast<std::size_t>(candidate)];
  Probability pl = clopper_pearson_lower(k, params.n, params.alpha);

  std::uint64_t passes = params.n0 + params.n;
  if (pl.value() <= 0.5) return CertOutcome::abstain(passes);
  return {true, candidate, pl.value(), certified_radius(sigma, pl).value(), passes};
}

/// One point on a sigma-radius curve. pa_lower is NaN when the curve comes
/// from a plain function rather than an estimator.
struct CurvePoint {
  double sigma = 0.0;
  double radius = 0.0;
  double pa_lower = std::numeric_limits<double>::quiet_NaN();
};

}  // namespace certsmooth
