#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace certsmooth {

/// A probability in [0, 1]. Construction rejects NaN and out-of-range values.
class Probability {
 public:
  explicit Probability(double v) : v_(v) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw std::domain_error("Probability must lie in [0, 1], got " + std::to_string(v));
    }
  }
  double value() const { return v_; }

 private:
  double v_;
};

/// A certified radius, nonnegative by construction.
class Radius {
 public:
  explicit Radius(double v) : v_(v) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw std::domain_error("Radius must be finite and >= 0, got " + std::to_string(v));
    }
  }
  double value() const { return v_; }

 private:
  double v_;
};

/// A Gaussian noise scale, strictly positive by construction.
class Sigma {
 public:
  explicit Sigma(double v) : v_(v) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw std::domain_error("Sigma must be finite and > 0, got " + std::to_string(v));
    }
  }
  double value() const { return v_; }

 private:
  double v_;
};

/// One labeled input: an identifier, a feature vector, and its reference label.
struct DataPoint {
  std::string id;
  std::vector<double> x;
  int label = 0;
};

/// Raised for malformed configuration (flags, model files). Maps to exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Raised for malformed or inconsistent input data. Maps to exit code 3.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace certsmooth
