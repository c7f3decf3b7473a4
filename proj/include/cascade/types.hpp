#ifndef CASCADE_TYPES_HPP
#define CASCADE_TYPES_HPP

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <utility>

namespace cascade {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// One point per row.
template <typename Scalar>
using PointSet = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Point = Vector<double>;

/// Axis-aligned box [lo, hi]; degenerate coordinates (lo == hi) are allowed.
struct Box {
  Point lo;
  Point hi;

  Box() = default;
  Box(Point l, Point h) : lo(std::move(l)), hi(std::move(h)) {
    if (lo.size() != hi.size()) throw std::invalid_argument("Box: lo/hi dimension mismatch");
    for (Eigen::Index k = 0; k < lo.size(); ++k)
      if (!(lo(k) <= hi(k))) throw std::invalid_argument("Box: lo must not exceed hi");
  }
  static Box unit(Eigen::Index dim) { return Box(Point::Zero(dim), Point::Ones(dim)); }
  static Box point(const Point& x) { return Box(x, x); }

  Eigen::Index dim() const { return lo.size(); }
  Point width() const { return hi - lo; }
  bool contains(const Point& x, double tol = 0.0) const {
    return ((x - lo).array() >= -tol).all() && ((hi - x).array() >= -tol).all();
  }
  Point clamp(const Point& x) const { return x.cwiseMax(lo).cwiseMin(hi); }

  friend bool operator==(const Box& a, const Box& b) { return a.lo == b.lo && a.hi == b.hi; }
};

/// Bad shapes, out-of-range parameters, malformed inputs.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Round-off pushed a quantity outside its analytic range.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Gram factorization failed for every jitter on the ladder.
class ConditioningError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// A duplicate input arrived with a different output.
class ConsistencyError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The reference-scale path was asked to do too much work.
class ScaleError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A hard-instance construction condition cannot be met.
class InfeasibleError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace cascade

#endif  // CASCADE_TYPES_HPP
