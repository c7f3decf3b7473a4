#ifndef CASCADE_GP_POSTERIOR_HPP
#define CASCADE_GP_POSTERIOR_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <utility>
#include <vector>

#include "cascade/kernels.hpp"

namespace cascade {

/// First rung of the jitter ladder; escalated ×10 up to kMaxJitter on factorization failure.
inline constexpr double kDefaultJitter = 1e-12;
inline constexpr double kMaxJitter = 1e-6;
/// Coordinates closer than this (max-abs) are the same input.
inline constexpr double kDuplicateTolerance = 1e-12;
/// Below this many unique points add_observation refactorizes; at or above it extends the factor.
inline constexpr Eigen::Index kIncrementalThreshold = 64;

namespace detail {
/// Number of variance evaluations that came out below -1e-8 before clamping.
inline std::atomic<std::size_t> negative_variance_warnings{0};
}  // namespace detail

inline std::size_t negative_variance_warning_count() { return detail::negative_variance_warnings.load(); }

/// Inputs (one per row) with one output row each; scalar layers have a single output column.
template <typename Scalar = double>
struct Dataset {
  PointSet<Scalar> points;
  Matrix<Scalar> values;

  Dataset() = default;
  Dataset(PointSet<Scalar> p, Matrix<Scalar> v) : points(std::move(p)), values(std::move(v)) {
    if (points.rows() != values.rows()) throw ArgumentError("Dataset: points/values length mismatch");
  }
  static Dataset empty(Eigen::Index dim, Eigen::Index outputs) {
    return Dataset(PointSet<Scalar>(0, dim), Matrix<Scalar>(0, outputs));
  }
  static Dataset scalar(PointSet<Scalar> p, const Vector<Scalar>& y) { return Dataset(std::move(p), Matrix<Scalar>(y)); }

  Eigen::Index size() const { return points.rows(); }
  Eigen::Index dim() const { return points.cols(); }
  Eigen::Index outputs() const { return values.cols(); }
};

namespace detail {

template <typename DerivedA, typename DerivedB>
bool same_point(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  return (a - b).cwiseAbs().maxCoeff() <= kDuplicateTolerance;
}

template <typename DerivedA, typename DerivedB>
bool same_value(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  for (Eigen::Index j = 0; j < a.size(); ++j) {
    const double scale = std::max(1.0, double(std::abs(a(j))));
    if (std::abs(double(a(j) - b(j))) > 1e-9 * scale) return false;
  }
  return true;
}

/// Drops repeated inputs, throwing on a repeated input with a different output.
template <typename Scalar>
Dataset<Scalar> unique_rows(const Dataset<Scalar>& data) {
  std::vector<Eigen::Index> keep;
  keep.reserve(data.size());
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    bool duplicate = false;
    for (Eigen::Index k : keep) {
      if (same_point(data.points.row(i), data.points.row(k))) {
        if (!same_value(data.values.row(i), data.values.row(k)))
          throw ConsistencyError("Dataset: duplicate input carries conflicting outputs");
        duplicate = true;
        break;
      }
    }
    if (!duplicate) keep.push_back(i);
  }
  if (keep.size() == std::size_t(data.size())) return data;
  Dataset<Scalar> out(PointSet<Scalar>(keep.size(), data.dim()), Matrix<Scalar>(keep.size(), data.outputs()));
  for (std::size_t r = 0; r < keep.size(); ++r) {
    out.points.row(r) = data.points.row(keep[r]);
    out.values.row(r) = data.values.row(keep[r]);
  }
  return out;
}

}  // namespace detail

template <typename Scalar = double>
struct Prediction {
  Matrix<Scalar> mean;  ///< N × outputs
  Vector<Scalar> std;   ///< N
};

template <typename Scalar = double>
struct ConfidenceInterval {
  Scalar lcb;
  Scalar ucb;
};

/// Noise-free GP posterior for one layer. Outputs share the input Gram factor, which is the
/// Kronecker form of a vector-valued posterior with Γ = k·I.
template <typename Scalar = double>
class PosteriorModel {
 public:
  static PosteriorModel prior(const KernelSpec& spec, Eigen::Index dim, Eigen::Index outputs = 1) {
    PosteriorModel model;
    model.spec_ = spec;
    model.data_ = Dataset<Scalar>::empty(dim, outputs);
    model.jitter_ = Scalar(0);
    model.chol_ = Matrix<Scalar>(0, 0);
    model.alpha_ = Matrix<Scalar>(0, outputs);
    return model;
  }

  static PosteriorModel fit(const KernelSpec& spec, const Dataset<Scalar>& data, Scalar jitter = Scalar(kDefaultJitter)) {
    spec.validate();
    if (jitter < Scalar(0)) throw ArgumentError("fit: jitter must be nonnegative");
    Dataset<Scalar> unique = detail::unique_rows(data);
    if (unique.size() == 0) return prior(spec, data.dim(), data.outputs());

    const Matrix<Scalar> gram = gram_matrix(spec, unique.points);
    std::vector<Scalar> tried;
    Scalar current = jitter;
    while (true) {
      tried.push_back(current);
      Eigen::LLT<Matrix<Scalar>> llt(gram + current * Matrix<Scalar>::Identity(gram.rows(), gram.cols()));
      if (llt.info() == Eigen::Success) {
        PosteriorModel model;
        model.spec_ = spec;
        model.data_ = std::move(unique);
        model.jitter_ = current;
        model.chol_ = llt.matrixL();
        model.refresh_weights();
        return model;
      }
      const Scalar next = current == Scalar(0) ? Scalar(kDefaultJitter) : current * Scalar(10);
      if (next > Scalar(kMaxJitter) * Scalar(1.0000001)) break;
      current = next;
    }
    std::ostringstream msg;
    msg << "fit: Gram factorization failed for jitter ladder {";
    for (std::size_t i = 0; i < tried.size(); ++i) msg << (i ? ", " : "") << double(tried[i]);
    msg << "}";
    throw ConditioningError(msg.str());
  }

  /// New model with one more observation; the receiver is left untouched.
  template <typename DerivedX, typename DerivedY>
  PosteriorModel add_observation(const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedY>& y) const {
    if (x.size() != dim()) throw ArgumentError("add_observation: input dimension mismatch");
    if (y.size() != outputs()) throw ArgumentError("add_observation: output dimension mismatch");
    for (Eigen::Index i = 0; i < size(); ++i) {
      if (detail::same_point(data_.points.row(i).transpose(), x)) {
        if (!detail::same_value(data_.values.row(i).transpose(), y))
          throw ConsistencyError("add_observation: duplicate input carries a conflicting output");
        return *this;
      }
    }
    Dataset<Scalar> extended(PointSet<Scalar>(size() + 1, dim()), Matrix<Scalar>(size() + 1, outputs()));
    extended.points.topRows(size()) = data_.points;
    extended.values.topRows(size()) = data_.values;
    extended.points.row(size()) = x.transpose();
    extended.values.row(size()) = y.transpose();

    if (size() < kIncrementalThreshold) return fit(spec_, extended, jitter_ == Scalar(0) ? Scalar(kDefaultJitter) : jitter_);

    PointSet<Scalar> xrow = x.transpose();
    const Vector<Scalar> cross = cross_covariance(spec_, data_.points, xrow).col(0);
    const Vector<Scalar> row = chol_.template triangularView<Eigen::Lower>().solve(cross);
    const Scalar pivot_sq = Scalar(1) + jitter_ - row.squaredNorm();
    if (!(pivot_sq > Scalar(0)) || pivot_sq < jitter_ * Scalar(1e-3))
      return fit(spec_, extended, jitter_);

    PosteriorModel model;
    model.spec_ = spec_;
    model.data_ = std::move(extended);
    model.jitter_ = jitter_;
    model.chol_ = Matrix<Scalar>::Zero(size() + 1, size() + 1);
    model.chol_.topLeftCorner(size(), size()) = chol_;
    model.chol_.row(size()).head(size()) = row.transpose();
    model.chol_(size(), size()) = std::sqrt(pivot_sq);
    model.refresh_weights();
    return model;
  }

  Prediction<Scalar> predict(const PointSet<Scalar>& queries) const {
    Prediction<Scalar> out;
    if (size() == 0) {
      out.mean = Matrix<Scalar>::Zero(queries.rows(), outputs());
      out.std = Vector<Scalar>::Ones(queries.rows());
      return out;
    }
    if (queries.cols() != dim()) throw ArgumentError("predict: query dimension mismatch");
    const Matrix<Scalar> cross = cross_covariance(spec_, data_.points, queries);
    out.mean = cross.transpose() * alpha_;
    const Matrix<Scalar> v = chol_.template triangularView<Eigen::Lower>().solve(cross);
    out.std.resize(queries.rows());
    for (Eigen::Index q = 0; q < queries.rows(); ++q) out.std(q) = clamp_std(Scalar(1) - v.col(q).squaredNorm());
    return out;
  }

  /// Means only; skips the triangular solve that the deviations need.
  Matrix<Scalar> predict_mean(const PointSet<Scalar>& queries) const {
    if (size() == 0) return Matrix<Scalar>::Zero(queries.rows(), outputs());
    if (queries.cols() != dim()) throw ArgumentError("predict: query dimension mismatch");
    return cross_covariance(spec_, data_.points, queries).transpose() * alpha_;
  }

  template <typename Derived>
  Vector<Scalar> mean(const Eigen::MatrixBase<Derived>& x) const {
    return predict(as_row(x)).mean.row(0).transpose();
  }

  template <typename Derived>
  Scalar std_dev(const Eigen::MatrixBase<Derived>& x) const {
    return predict(as_row(x)).std(0);
  }

  template <typename Derived>
  ConfidenceInterval<Scalar> confidence_interval(const Eigen::MatrixBase<Derived>& x, Scalar bound, Eigen::Index output = 0) const {
    if (!(bound > Scalar(0))) throw ArgumentError("confidence_interval: B must be positive");
    const Prediction<Scalar> p = predict(as_row(x));
    return {p.mean(0, output) - bound * p.std(0), p.mean(0, output) + bound * p.std(0)};
  }

  const KernelSpec& spec() const { return spec_; }
  const Dataset<Scalar>& data() const { return data_; }
  Scalar jitter() const { return jitter_; }
  const Matrix<Scalar>& factor() const { return chol_; }
  const Matrix<Scalar>& weights() const { return alpha_; }
  Eigen::Index size() const { return data_.size(); }
  Eigen::Index dim() const { return data_.dim(); }
  Eigen::Index outputs() const { return data_.outputs(); }

  /// Smallest squared Cholesky pivot: a cheap stand-in for the smallest eigenvalue.
  Scalar min_pivot() const {
    if (size() == 0) return Scalar(1);
    return chol_.diagonal().array().square().minCoeff();
  }

 private:
  template <typename Derived>
  PointSet<Scalar> as_row(const Eigen::MatrixBase<Derived>& x) const {
    if (x.size() != dim()) throw ArgumentError("posterior query: dimension mismatch");
    return PointSet<Scalar>(x.transpose());
  }

  static Scalar clamp_std(Scalar variance) {
    if (variance < Scalar(0)) {
      if (variance < Scalar(-1e-8)) detail::negative_variance_warnings.fetch_add(1, std::memory_order_relaxed);
      return Scalar(0);
    }
    return std::sqrt(std::min(variance, Scalar(1)));
  }

  void refresh_weights() {
    const Matrix<Scalar> half = chol_.template triangularView<Eigen::Lower>().solve(data_.values);
    alpha_ = chol_.template triangularView<Eigen::Lower>().adjoint().solve(half);
  }

  KernelSpec spec_;
  Dataset<Scalar> data_;
  Scalar jitter_ = Scalar(0);
  Matrix<Scalar> chol_;
  Matrix<Scalar> alpha_;
};

template <typename Scalar>
PosteriorModel<Scalar> fit(const KernelSpec& spec, const Dataset<Scalar>& data, Scalar jitter = Scalar(kDefaultJitter)) {
  return PosteriorModel<Scalar>::fit(spec, data, jitter);
}

template <typename Scalar, typename Derived>
Scalar posterior_mean(const PosteriorModel<Scalar>& model, const Eigen::MatrixBase<Derived>& x) {
  return model.mean(x)(0);
}

template <typename Scalar, typename Derived>
Scalar posterior_std(const PosteriorModel<Scalar>& model, const Eigen::MatrixBase<Derived>& x) {
  return model.std_dev(x);
}

template <typename Scalar, typename Derived>
ConfidenceInterval<Scalar> confidence_interval(const PosteriorModel<Scalar>& model, const Eigen::MatrixBase<Derived>& x, Scalar bound) {
  return model.confidence_interval(x, bound);
}

enum class MultiPath { Kronecker, FullBlock };

template <typename Scalar = double>
struct MultiPosterior {
  Vector<Scalar> mean;
  Matrix<Scalar> var;
  Scalar jitter;
};

/// Largest n·t the full block path will assemble.
inline constexpr Eigen::Index kFullBlockLimit = 64;

/// Vector-valued posterior for Γ = k·I. The Kronecker path reuses the scalar factor; the full
/// block path solves the nt × nt system with G_t = K_t ⊗ I_n directly. Both use the jitter the
/// scalar ladder settles on so they are comparable.
template <typename Scalar, typename Derived>
MultiPosterior<Scalar> multi_posterior(const KernelSpec& spec, const Dataset<Scalar>& data,
                                       const Eigen::MatrixBase<Derived>& x, MultiPath path) {
  const Eigen::Index n = data.outputs();
  if (n < 1) throw ArgumentError("multi_posterior: need at least one output");
  const PosteriorModel<Scalar> model = PosteriorModel<Scalar>::fit(spec, data);
  if (path == MultiPath::Kronecker) {
    const Prediction<Scalar> p = model.predict(PointSet<Scalar>(x.transpose()));
    const Scalar s = p.std(0);
    return {p.mean.row(0).transpose(), (s * s) * Matrix<Scalar>::Identity(n, n), model.jitter()};
  }

  const Dataset<Scalar>& unique = model.data();
  const Eigen::Index t = unique.size();
  if (n * t > kFullBlockLimit) throw ScaleError("multi_posterior: full block path limited to n*t <= 64");
  const Scalar jitter = model.jitter();
  if (t == 0) return {Vector<Scalar>::Zero(n), Matrix<Scalar>::Identity(n, n), jitter};

  const Matrix<Scalar> eye = Matrix<Scalar>::Identity(n, n);
  Matrix<Scalar> block(n * t, n * t);
  Matrix<Scalar> cross(n * t, n);
  Vector<Scalar> stacked(n * t);
  for (Eigen::Index i = 0; i < t; ++i) {
    for (Eigen::Index j = 0; j < t; ++j)
      block.block(i * n, j * n, n, n) = kernel_eval(spec, unique.points.row(i), unique.points.row(j)) * eye;
    cross.block(i * n, 0, n, n) = kernel_eval(spec, unique.points.row(i).transpose(), x) * eye;
    stacked.segment(i * n, n) = unique.values.row(i).transpose();
  }
  block.diagonal().array() += jitter;
  Eigen::LLT<Matrix<Scalar>> llt(block);
  if (llt.info() != Eigen::Success) throw ConditioningError("multi_posterior: full block factorization failed");
  const Matrix<Scalar> prior = kernel_eval(spec, x, x) * eye;
  return {cross.transpose() * llt.solve(stacked), prior - cross.transpose() * llt.solve(cross), jitter};
}

}  // namespace cascade

#endif  // CASCADE_GP_POSTERIOR_HPP
