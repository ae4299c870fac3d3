#pragma once

#include <Eigen/Core>

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>

namespace volvar {

/// Largest ambient dimension supported by the fixed-capacity vector types.
inline constexpr int kMaxAmbient = 3;

/// Point or vector of R^n, n <= kMaxAmbient. Heap-free.
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxAmbient, 1>;
/// Small dense matrix, at most kMaxAmbient x kMaxAmbient.
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxAmbient, kMaxAmbient>;

using ScalarField = std::function<double(const Vec&)>;

/// C^1 vector field with an analytic Jacobian (row i = gradient of component i).
struct VectorField {
  std::function<Vec(const Vec&)> value;
  std::function<Mat(const Vec&)> jacobian;
};

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class NotOnShape : public Error {
 public:
  using Error::Error;
};

class PreconditionViolated : public Error {
 public:
  using Error::Error;
};

/// Numerical breakdown (e.g. self-intersecting polyline, non-convergent solver).
class NumericalFailure : public Error {
 public:
  using Error::Error;
};

inline Vec make_vec(std::initializer_list<double> values) {
  Vec v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v(i++) = x;
  return v;
}

/// Neumaier compensated accumulator.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace volvar
