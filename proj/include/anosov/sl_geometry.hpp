#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "anosov/tolerances.hpp"

// Linear-algebra model of the symmetric space SL(k+1,R)/SO(k+1).
// Points are unit-determinant positive definite symmetric matrices, the
// group acts by g.P = g P g^T, and the vector-valued distance between two
// points is the sorted vector of log singular values of any mover.

namespace anosov {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Unit-determinant square matrix. Renormalizes by det^{1/(k+1)} on ingest.
class SquareMatrix {
 public:
  explicit SquareMatrix(Matrix entries) : m_(std::move(entries)) {
    if (m_.rows() != m_.cols() || m_.rows() < 2)
      throw std::invalid_argument("SquareMatrix: need a square matrix of dim >= 2");
    if (!m_.allFinite()) throw std::invalid_argument("SquareMatrix: non-finite entries");
    const double det = m_.determinant();
    if (!(std::abs(det) > 0.0))
      throw std::invalid_argument("SquareMatrix: singular input");
    if (det < 0.0)
      throw std::invalid_argument("SquareMatrix: negative determinant");
    m_ /= std::pow(det, 1.0 / static_cast<double>(m_.rows()));
  }

  const Matrix& entries() const { return m_; }
  int dim() const { return static_cast<int>(m_.rows()); }

  SquareMatrix inverse() const { return SquareMatrix(m_.inverse()); }

  SquareMatrix operator*(const SquareMatrix& o) const { return SquareMatrix(m_ * o.m_); }

 private:
  Matrix m_;
};

// A point of X: symmetric positive definite, det 1. Caches the symmetric
// square root and its inverse for basepoint changes.
class BasePoint {
 public:
  explicit BasePoint(const Matrix& p) {
    if (p.rows() != p.cols()) throw std::invalid_argument("BasePoint: not square");
    if ((p - p.transpose()).cwiseAbs().maxCoeff() > tol::kExact * (1.0 + p.cwiseAbs().maxCoeff()))
      throw std::invalid_argument("BasePoint: not symmetric");
    Matrix sym = 0.5 * (p + p.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
    if (es.eigenvalues().minCoeff() <= 0.0)
      throw std::invalid_argument("BasePoint: not positive definite");
    // renormalize det to 1 through the eigenvalues
    Vector ev = es.eigenvalues();
    const double logdet = ev.array().log().sum();
    const double scale = std::exp(-logdet / static_cast<double>(ev.size()));
    ev *= scale;
    p_ = sym * scale;
    sqrt_ = es.eigenvectors() * ev.array().sqrt().matrix().asDiagonal() *
            es.eigenvectors().transpose();
    inv_sqrt_ = es.eigenvectors() * ev.array().rsqrt().matrix().asDiagonal() *
                es.eigenvectors().transpose();
  }

  static BasePoint identity(int dim) { return BasePoint(Matrix::Identity(dim, dim)); }

  const Matrix& matrix() const { return p_; }
  const Matrix& sqrt() const { return sqrt_; }
  const Matrix& inverse_sqrt() const { return inv_sqrt_; }
  int dim() const { return static_cast<int>(p_.rows()); }

 private:
  Matrix p_, sqrt_, inv_sqrt_;
};

// Sorted zero-sum vector of log singular values.
class CartanVector {
 public:
  explicit CartanVector(Vector sigma) : sigma_(std::move(sigma)) {
    for (int i = 0; i + 1 < sigma_.size(); ++i)
      if (sigma_[i] < sigma_[i + 1] - tol::kUnit)
        throw std::invalid_argument("CartanVector: not nonincreasing");
    // project out residual trace drift
    sigma_.array() -= sigma_.mean();
  }

  const Vector& sigma() const { return sigma_; }
  int size() const { return static_cast<int>(sigma_.size()); }
  double operator[](int i) const { return sigma_[i]; }

 private:
  Vector sigma_;
};

// The type vector theta in the interior of the model face tau_mod,
// normalized to unit Killing norm 2(k+1) sum theta_i^2 = 1.
class TypeVector {
 public:
  TypeVector(Vector theta, std::vector<int> tau_mod)
      : theta_(std::move(theta)), tau_mod_(std::move(tau_mod)) {
    const int kp1 = static_cast<int>(theta_.size());
    const double norm2 = 2.0 * kp1 * theta_.squaredNorm();
    if (std::abs(norm2 - 1.0) > tol::kUnit)
      throw std::invalid_argument("TypeVector: not unit Killing norm");
    for (int i = 0; i < kp1; ++i)
      if (std::abs(theta_[i] + theta_[kp1 - 1 - i]) > tol::kExact)
        throw std::invalid_argument("TypeVector: not iota-invariant");
  }

  // Default type for tau_mod = (1,k): theta = (1/(2 sqrt(k+1)), 0, ..., 0, -1/(2 sqrt(k+1))).
  static TypeVector line_hyperplane(int kp1) {
    Vector theta = Vector::Zero(kp1);
    const double a = 0.5 / std::sqrt(static_cast<double>(kp1));
    theta[0] = a;
    theta[kp1 - 1] = -a;
    return TypeVector(theta, {1, kp1 - 1});
  }

  const Vector& theta() const { return theta_; }
  const std::vector<int>& tau_mod() const { return tau_mod_; }
  int size() const { return static_cast<int>(theta_.size()); }

 private:
  Vector theta_;
  std::vector<int> tau_mod_;
};

// Isometric action g.P = g P g^T.
inline BasePoint apply(const SquareMatrix& g, const BasePoint& x) {
  return BasePoint(g.entries() * x.matrix() * g.entries().transpose());
}

// Killing norm on the model flat: sqrt(2(k+1) sum sigma_i^2).
inline double killing_norm(const Vector& sigma) {
  return std::sqrt(2.0 * static_cast<double>(sigma.size()) * sigma.squaredNorm());
}

// Killing inner product 2(k+1) sum sigma_i sigma'_i.
inline double killing_inner(const Vector& a, const Vector& b) {
  return 2.0 * static_cast<double>(a.size()) * a.dot(b);
}

// Sorted log singular values of x^{-1/2} g x^{1/2}.
inline CartanVector cartan_projection(const SquareMatrix& g, const BasePoint& x) {
  if (g.dim() != x.dim()) throw std::invalid_argument("cartan_projection: dimension mismatch");
  const Matrix m = x.inverse_sqrt() * g.entries() * x.sqrt();
  Eigen::JacobiSVD<Matrix> svd(m);
  Vector sv = svd.singularValues();
  if (!(sv.minCoeff() > 0.0) || !sv.allFinite())
    throw std::domain_error("cartan_projection: numerically singular input");
  Vector sigma = sv.array().log();
  return CartanVector(std::move(sigma));  // JacobiSVD returns sorted values
}

inline CartanVector opposition_involution(const CartanVector& v) {
  return CartanVector(-v.sigma().reverse());
}

// Delta-valued distance between two points: half the log eigenvalues of
// x^{-1/2} y x^{-1/2}, sorted nonincreasing.
inline CartanVector delta_distance(const BasePoint& x, const BasePoint& y) {
  if (x.dim() != y.dim()) throw std::invalid_argument("delta_distance: dimension mismatch");
  const Matrix m = x.inverse_sqrt() * y.matrix() * x.inverse_sqrt();
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.transpose()));
  if (es.eigenvalues().minCoeff() <= 0.0)
    throw std::domain_error("delta_distance: lost positivity");
  Vector sigma = 0.5 * es.eigenvalues().array().log();
  return CartanVector(sigma.reverse());
}

inline double riemannian_distance(const BasePoint& x, const BasePoint& y) {
  return killing_norm(delta_distance(x, y).sigma());
}

inline double finsler_distance(const BasePoint& x, const BasePoint& y, const TypeVector& theta) {
  if (theta.size() != x.dim())
    throw std::invalid_argument("finsler_distance: theta dimension mismatch");
  return killing_inner(delta_distance(x, y).sigma(), theta.theta());
}

// A group element carried together with its accumulated inverse. For deep
// products a single SVD recovers small singular values only to absolute
// precision eps * sigma_max, which destroys the lower half of the spectrum;
// the inverse factor, accumulated alongside during enumeration, restores
// relative accuracy there.
struct GroupPair {
  Matrix m, minv;

  static GroupPair from(const SquareMatrix& g) {
    return {g.entries(), g.entries().inverse()};
  }
  GroupPair inverse() const { return {minv, m}; }
};

namespace detail {
// log singular values assembled from two relatively accurate halves; the
// middle entry of an odd spectrum comes from the trace-zero constraint
inline CartanVector paired_log_singular(const Matrix& forward, const Matrix& backward) {
  Eigen::JacobiSVD<Matrix> sf(forward), sb(backward);
  const int n = static_cast<int>(forward.rows());
  if (!(sf.singularValues().minCoeff() > 0.0) || !(sb.singularValues().minCoeff() > 0.0) ||
      !sf.singularValues().allFinite() || !sb.singularValues().allFinite())
    throw std::domain_error("paired_log_singular: numerically singular input");
  Vector sigma(n);
  for (int i = 0; i < n; ++i) sigma[i] = std::log(sf.singularValues()[i]);
  for (int i = 0; i < n / 2; ++i) sigma[n - 1 - i] = -std::log(sb.singularValues()[i]);
  if (n % 2 == 1) {
    double s = 0.0;
    for (int i = 0; i < n; ++i)
      if (i != n / 2) s += sigma[i];
    sigma[n / 2] = -s;
  }
  std::sort(sigma.data(), sigma.data() + n, std::greater<double>());
  return CartanVector(std::move(sigma));
}
}  // namespace detail

// d_Delta(x, g.x0), both halves of the spectrum relatively accurate.
inline CartanVector orbit_delta_distance(const BasePoint& x, const BasePoint& x0,
                                         const GroupPair& g) {
  return detail::paired_log_singular(x.inverse_sqrt() * g.m * x0.sqrt(),
                                     x0.inverse_sqrt() * g.minv * x.sqrt());
}

inline CartanVector cartan_projection(const GroupPair& g, const BasePoint& x) {
  return orbit_delta_distance(x, x, g);
}

inline double orbit_finsler_distance(const BasePoint& x, const BasePoint& x0,
                                     const GroupPair& g, const TypeVector& theta) {
  return killing_inner(orbit_delta_distance(x, x0, g).sigma(), theta.theta());
}

inline double orbit_riemannian_distance(const BasePoint& x, const BasePoint& x0,
                                        const GroupPair& g) {
  return killing_norm(orbit_delta_distance(x, x0, g).sigma());
}

// || d_Delta(x,y) - d_Delta(x,z) ||_Killing - d_R(y,z). Contract: <= 1e-8.
inline double delta_triangle_defect(const BasePoint& x, const BasePoint& y, const BasePoint& z) {
  const Vector dxy = delta_distance(x, y).sigma();
  const Vector dxz = delta_distance(x, z).sigma();
  return killing_norm(dxy - dxz) - riemannian_distance(y, z);
}

}  // namespace anosov
