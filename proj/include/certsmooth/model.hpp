#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "certsmooth/stats.hpp"

namespace certsmooth {

/// Process-wide forward-pass counter. Every classifier evaluation made
/// through the sampling layer is counted here, which is what the overhead
/// accounting in the optimizer and reports is measured against.
inline std::atomic<std::uint64_t>& forward_pass_counter() {
  static std::atomic<std::uint64_t> counter{0};
  return counter;
}

inline std::uint64_t forward_passes() {
  return forward_pass_counter().load(std::memory_order_relaxed);
}

inline void reset_forward_passes() {
  forward_pass_counter().store(0, std::memory_order_relaxed);
}

inline void add_forward_passes(std::uint64_t n) {
  forward_pass_counter().fetch_add(n, std::memory_order_relaxed);
}

/// Deterministic base classifier over R^d.
class BaseModel {
 public:
  virtual ~BaseModel() = default;
  virtual int classify(std::span<const double> x) const = 0;
  virtual int num_classes() const = 0;
  virtual int dimension() const = 0;

  /// Exact probability that classify(x + sigma * Z) == label for standard
  /// normal Z, when the model admits a closed form. Models without one
  /// return nullopt.
  virtual std::optional<double> exact_class_probability(std::span<const double> x, double sigma,
                                                        int label) const {
    (void)x;
    (void)sigma;
    (void)label;
    return std::nullopt;
  }
};

namespace detail {

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline void check_dimension(std::span<const double> x, int d, const char* who) {
  if (x.size() != static_cast<std::size_t>(d)) {
    throw std::invalid_argument(std::string(who) + ": input has dimension " +
                                std::to_string(x.size()) + ", model expects " + std::to_string(d));
  }
}

}  // namespace detail

/// Halfspace classifier: label positive_label iff w . x + b >= 0.
/// Under Gaussian noise the positive-class probability is
/// Phi((w . x + b) / (sigma * ||w||)).
class LinearModel : public BaseModel {
 public:
  LinearModel(std::vector<double> w, double b, int positive_label, int negative_label)
      : w_(std::move(w)), b_(b), positive_(positive_label), negative_(negative_label) {
    if (w_.empty()) throw std::invalid_argument("LinearModel: weight vector is empty");
    if (positive_ < 0 || negative_ < 0 || positive_ == negative_) {
      throw std::invalid_argument("LinearModel: labels must be distinct and >= 0");
    }
    double sq = 0.0;
    for (double wi : w_) sq += wi * wi;
    norm_ = std::sqrt(sq);
    if (!(norm_ > 0.0)) throw std::invalid_argument("LinearModel: weight vector is zero");
  }

  int classify(std::span<const double> x) const override {
    detail::check_dimension(x, dimension(), "LinearModel::classify");
    return detail::dot(w_, x) + b_ >= 0.0 ? positive_ : negative_;
  }

  int num_classes() const override { return std::max(positive_, negative_) + 1; }
  int dimension() const override { return static_cast<int>(w_.size()); }

  std::optional<double> exact_class_probability(std::span<const double> x, double sigma,
                                                int label) const override {
    detail::check_dimension(x, dimension(), "LinearModel::exact_class_probability");
    double p_pos = normal_cdf((detail::dot(w_, x) + b_) / (sigma * norm_));
    if (label == positive_) return p_pos;
    if (label == negative_) return 1.0 - p_pos;
    return 0.0;
  }

  /// Signed distance from x to the decision boundary.
  double margin(std::span<const double> x) const {
    detail::check_dimension(x, dimension(), "LinearModel::margin");
    return (detail::dot(w_, x) + b_) / norm_;
  }

  double weight_norm() const { return norm_; }
  int positive_label() const { return positive_; }
  int negative_label() const { return negative_; }
  const std::vector<double>& weights() const { return w_; }
  double bias() const { return b_; }

 private:
  std::vector<double> w_;
  double b_;
  int positive_;
  int negative_;
  double norm_;
};

/// Ball classifier: label inside_label iff ||x - center|| <= rho.
/// Has a closed-form smoothed probability in dimension 1 only.
class BallModel : public BaseModel {
 public:
  BallModel(std::vector<double> center, double rho, int inside_label, int outside_label)
      : center_(std::move(center)), rho_(rho), inside_(inside_label), outside_(outside_label) {
    if (center_.empty()) throw std::invalid_argument("BallModel: center is empty");
    if (!(rho_ > 0.0)) throw std::invalid_argument("BallModel: rho must be > 0");
    if (inside_ < 0 || outside_ < 0 || inside_ == outside_) {
      throw std::invalid_argument("BallModel: labels must be distinct and >= 0");
    }
  }

  int classify(std::span<const double> x) const override {
    detail::check_dimension(x, dimension(), "BallModel::classify");
    double sq = 0.0;
    for (std::size_t i = 0; i < center_.size(); ++i) {
      double d = x[i] - center_[i];
      sq += d * d;
    }
    return sq <= rho_ * rho_ ? inside_ : outside_;
  }

  int num_classes() const override { return std::max(inside_, outside_) + 1; }
  int dimension() const override { return static_cast<int>(center_.size()); }

  std::optional<double> exact_class_probability(std::span<const double> x, double sigma,
                                                int label) const override {
    detail::check_dimension(x, dimension(), "BallModel::exact_class_probability");
    if (dimension() != 1) return std::nullopt;
    double t = x[0] - center_[0];
    double p_in = normal_cdf((rho_ - t) / sigma) - normal_cdf((-rho_ - t) / sigma);
    if (label == inside_) return p_in;
    if (label == outside_) return 1.0 - p_in;
    return 0.0;
  }

  double rho() const { return rho_; }
  int inside_label() const { return inside_; }
  int outside_label() const { return outside_; }
  const std::vector<double>& center() const { return center_; }

 private:
  std::vector<double> center_;
  double rho_;
  int inside_;
  int outside_;
};

/// One region of a CompositeModel: a ball or a halfspace with a label.
struct Region {
  enum class Kind { ball, halfspace };
  Kind kind;
  std::vector<double> center;  // ball
  double rho = 0.0;            // ball
  std::vector<double> w;       // halfspace
  double b = 0.0;              // halfspace
  int label = 0;

  bool contains(std::span<const double> x) const {
    if (kind == Kind::ball) {
      double sq = 0.0;
      for (std::size_t i = 0; i < center.size(); ++i) {
        double d = x[i] - center[i];
        sq += d * d;
      }
      return sq <= rho * rho;
    }
    return detail::dot(w, x) + b >= 0.0;
  }
};

/// Ordered region list; the first region containing x wins, otherwise the
/// default label applies. An empty region list is the constant classifier.
/// No closed-form smoothed probability; use brute_force_pa against it.
class CompositeModel : public BaseModel {
 public:
  CompositeModel(int dimension, int default_label, std::vector<Region> regions)
      : dimension_(dimension), default_(default_label), regions_(std::move(regions)) {
    if (dimension_ < 1) throw std::invalid_argument("CompositeModel: dimension must be >= 1");
    if (default_ < 0) throw std::invalid_argument("CompositeModel: default label must be >= 0");
    int max_label = default_;
    for (const auto& r : regions_) {
      if (r.label < 0) throw std::invalid_argument("CompositeModel: region label must be >= 0");
      if (r.kind == Region::Kind::ball) {
        if (r.center.size() != static_cast<std::size_t>(dimension_)) {
          throw std::invalid_argument("CompositeModel: ball region dimension mismatch");
        }
        if (!(r.rho > 0.0)) throw std::invalid_argument("CompositeModel: region rho must be > 0");
      } else {
        if (r.w.size() != static_cast<std::size_t>(dimension_)) {
          throw std::invalid_argument("CompositeModel: halfspace region dimension mismatch");
        }
      }
      max_label = std::max(max_label, r.label);
    }
    num_classes_ = max_label + 1;
  }

  int classify(std::span<const double> x) const override {
    detail::check_dimension(x, dimension_, "CompositeModel::classify");
    for (const auto& r : regions_) {
      if (r.contains(x)) return r.label;
    }
    return default_;
  }

  int num_classes() const override { return num_classes_; }
  int dimension() const override { return dimension_; }

  int default_label() const { return default_; }
  const std::vector<Region>& regions() const { return regions_; }

 private:
  int dimension_;
  int default_;
  std::vector<Region> regions_;
  int num_classes_;
};

}  // namespace certsmooth
