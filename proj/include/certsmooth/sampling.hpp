#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "certsmooth/model.hpp"
#include "certsmooth/rng.hpp"
#include "certsmooth/types.hpp"

namespace certsmooth {

/// Draws n noisy copies x + sigma * Z and tallies the predicted classes.
/// Counts depend only on (model, x, sigma, n, seed); draw i is generated
/// from counter index i, so results are identical under any evaluation
/// order. Adds n to the global forward-pass counter.
inline std::vector<std::uint64_t> sample_class_counts(const BaseModel& model,
                                                      std::span<const double> x, Sigma sigma,
                                                      std::uint64_t n, std::uint64_t seed) {
  detail::check_dimension(x, model.dimension(), "sample_class_counts");
  if (n < 1) throw std::invalid_argument("sample_class_counts requires n >= 1");
  GaussianNoise noise(seed);
  double s = sigma.value();
  std::size_t d = x.size();
  std::vector<double> noisy(d);
  std::vector<std::uint64_t> counts(static_cast<std::size_t>(model.num_classes()), 0);
  for (std::uint64_t i = 0; i < n; ++i) {
    noise.fill(i, noisy);
    for (std::size_t j = 0; j < d; ++j) noisy[j] = x[j] + s * noisy[j];
    ++counts[static_cast<std::size_t>(model.classify(noisy))];
  }
  add_forward_passes(n);
  return counts;
}

/// Exact smoothed class probability Pr[f(x + sigma Z) == label]. Only models
/// with a closed form support this (LinearModel, BallModel in dimension 1);
/// anything else throws and should be estimated with brute_force_pa.
inline Probability exact_pa(const BaseModel& model, std::span<const double> x, Sigma sigma,
                            int label) {
  if (label < 0 || label >= model.num_classes()) {
    throw std::invalid_argument("exact_pa: label out of range");
  }
  auto p = model.exact_class_probability(x, sigma.value(), label);
  if (!p) {
    throw std::invalid_argument(
        "exact_pa: model has no closed-form smoothed probability; use brute_force_pa");
  }
  return Probability(*p);
}

/// Monte Carlo estimate of the smoothed class probability from n_oracle
/// draws on a dedicated stream. Intended as an independent check against
/// exact_pa, not as a certification bound.
inline Probability brute_force_pa(const BaseModel& model, std::span<const double> x, Sigma sigma,
                                  int label, std::uint64_t n_oracle, std::uint64_t seed) {
  if (label < 0 || label >= model.num_classes()) {
    throw std::invalid_argument("brute_force_pa: label out of range");
  }
  auto counts = sample_class_counts(model, x, sigma, n_oracle,
                                    derive_seed(seed, seeds::kOracle));
  return Probability(static_cast<double>(counts[static_cast<std::size_t>(label)]) /
                     static_cast<double>(n_oracle));
}

}  // namespace certsmooth
