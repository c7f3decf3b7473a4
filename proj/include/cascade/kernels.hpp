#ifndef CASCADE_KERNELS_HPP
#define CASCADE_KERNELS_HPP

#include <cmath>
#include <string>

#include "cascade/types.hpp"

namespace cascade {

enum class KernelFamily { Matern };

/// Unit-variance Matérn kernel: k(x, x) = 1, smoothness `nu`, lengthscale `lengthscale`.
struct KernelSpec {
  KernelFamily family = KernelFamily::Matern;
  double nu = 1.5;
  double lengthscale = 0.2;

  void validate() const {
    if (!(nu > 0.0) || !std::isfinite(nu)) throw ArgumentError("kernel nu must be positive");
    if (!(lengthscale > 0.0) || !std::isfinite(lengthscale))
      throw ArgumentError("kernel lengthscale must be positive");
  }

  friend bool operator==(const KernelSpec&, const KernelSpec&) = default;
};

namespace detail {

inline bool nu_matches(double nu, double target) { return std::abs(nu - target) <= 1e-12; }

/// Bessel-form Matérn; the closed-form branches never reach it.
template <typename Scalar>
Scalar matern_bessel(Scalar nu, Scalar s) {
  using std::exp;
  using std::log;
  if (s < Scalar(1e-10)) return Scalar(1);
  const Scalar bessel = std::cyl_bessel_k(nu, s);
  if (!(bessel > Scalar(0))) return Scalar(0);
  const Scalar log_k = (Scalar(1) - nu) * log(Scalar(2)) - std::lgamma(nu) + nu * log(s) + log(bessel);
  return exp(log_k);
}

}  // namespace detail

/// k as a function of distance r ≥ 0.
template <typename Scalar = double>
Scalar matern_of_distance(const KernelSpec& spec, Scalar r) {
  using std::exp;
  using std::sqrt;
  if (r == Scalar(0)) return Scalar(1);
  const Scalar l = static_cast<Scalar>(spec.lengthscale);
  Scalar value;
  if (detail::nu_matches(spec.nu, 0.5)) {
    value = exp(-r / l);
  } else if (detail::nu_matches(spec.nu, 1.5)) {
    const Scalar s = sqrt(Scalar(3)) * r / l;
    value = (Scalar(1) + s) * exp(-s);
  } else if (detail::nu_matches(spec.nu, 2.5)) {
    const Scalar s = sqrt(Scalar(5)) * r / l;
    value = (Scalar(1) + s + s * s / Scalar(3)) * exp(-s);
  } else {
    const Scalar nu = static_cast<Scalar>(spec.nu);
    value = detail::matern_bessel(nu, sqrt(Scalar(2) * nu) * r / l);
  }
  return value > Scalar(1) ? Scalar(1) : value;
}

/// Always goes through the modified-Bessel expression, whatever nu is.
template <typename Scalar = double>
Scalar matern_bessel_form(const KernelSpec& spec, Scalar r) {
  if (r == Scalar(0)) return Scalar(1);
  const Scalar nu = static_cast<Scalar>(spec.nu);
  return detail::matern_bessel(nu, std::sqrt(Scalar(2) * nu) * r / static_cast<Scalar>(spec.lengthscale));
}

template <typename Derived1, typename Derived2>
typename Derived1::Scalar kernel_eval(const KernelSpec& spec, const Eigen::MatrixBase<Derived1>& x,
                                      const Eigen::MatrixBase<Derived2>& x2) {
  if (x.size() != x2.size()) throw ArgumentError("kernel_eval: dimension mismatch");
  return matern_of_distance(spec, (x - x2).norm());
}

/// Cross-covariance [k(a_i, b_j)] for row-point sets.
template <typename Scalar>
Matrix<Scalar> cross_covariance(const KernelSpec& spec, const PointSet<Scalar>& a, const PointSet<Scalar>& b) {
  if (a.rows() > 0 && b.rows() > 0 && a.cols() != b.cols())
    throw ArgumentError("cross_covariance: dimension mismatch");
  Matrix<Scalar> out(a.rows(), b.rows());
  for (Eigen::Index j = 0; j < b.rows(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      out(i, j) = matern_of_distance(spec, (a.row(i) - b.row(j)).norm());
  return out;
}

template <typename Scalar>
Matrix<Scalar> gram_matrix(const KernelSpec& spec, const PointSet<Scalar>& points) {
  if (points.rows() == 0) throw ArgumentError("gram_matrix: empty point list");
  const Eigen::Index n = points.rows();
  Matrix<Scalar> gram(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    gram(j, j) = Scalar(1);
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const Scalar v = matern_of_distance(spec, (points.row(i) - points.row(j)).norm());
      gram(i, j) = v;
      gram(j, i) = v;
    }
  }
  return gram;
}

/// f(·) = Σ coeffs_i k(·, centers_i); no centers is the zero function.
template <typename Scalar = double>
struct Expansion {
  PointSet<Scalar> centers;
  Vector<Scalar> coeffs;
  KernelSpec spec;

  Expansion() = default;
  Expansion(PointSet<Scalar> c, Vector<Scalar> a, KernelSpec s)
      : centers(std::move(c)), coeffs(std::move(a)), spec(s) {
    if (centers.rows() != coeffs.size()) throw ArgumentError("Expansion: centers/coeffs length mismatch");
  }

  static Expansion zero(Eigen::Index dim, KernelSpec s) {
    return Expansion(PointSet<Scalar>(0, dim), Vector<Scalar>(0), s);
  }

  Eigen::Index size() const { return coeffs.size(); }
  Eigen::Index dim() const { return centers.cols(); }
  bool empty() const { return coeffs.size() == 0; }

  template <typename Derived>
  Scalar operator()(const Eigen::MatrixBase<Derived>& z) const {
    Scalar acc = Scalar(0);
    if (empty()) return acc;
    if (z.size() != centers.cols()) throw ArgumentError("Expansion: dimension mismatch");
    for (Eigen::Index i = 0; i < coeffs.size(); ++i)
      acc += coeffs(i) * matern_of_distance(spec, (centers.row(i).transpose() - z).norm());
    return acc;
  }

  Vector<Scalar> evaluate(const PointSet<Scalar>& points) const {
    if (empty()) return Vector<Scalar>::Zero(points.rows());
    return cross_covariance(spec, points, centers) * coeffs;
  }
};

/// ⟨f, g⟩ = Σ_ij a_i b_j k(x_i, x'_j).
template <typename Scalar>
Scalar rkhs_inner(const Expansion<Scalar>& f, const Expansion<Scalar>& g) {
  if (f.empty() || g.empty()) return Scalar(0);
  return f.coeffs.dot(cross_covariance(f.spec, f.centers, g.centers) * g.coeffs);
}

template <typename Scalar>
Scalar rkhs_norm(const Expansion<Scalar>& f) {
  if (f.empty()) return Scalar(0);
  const Scalar q = f.coeffs.dot(gram_matrix(f.spec, f.centers) * f.coeffs);
  if (q < Scalar(-1e-10)) throw NumericalError("rkhs_norm: negative quadratic form " + std::to_string(double(q)));
  return q > Scalar(0) ? std::sqrt(q) : Scalar(0);
}

}  // namespace cascade

#endif  // CASCADE_KERNELS_HPP
