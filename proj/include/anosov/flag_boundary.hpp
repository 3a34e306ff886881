#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>

#include "anosov/sl_geometry.hpp"
#include "anosov/tolerances.hpp"

// The partial flag manifold Flag(1,k) for the SL model: (line, hyperplane)
// incident pairs in R^{k+1}. Flags are stored in ambient coordinates with
// unit vectors and a fixed sign convention; angle computations transform to
// the orthonormal frame of the chosen basepoint.

namespace anosov {

namespace detail {
// sign convention: first coordinate with |v_i| > kExact * |v| made positive
inline Vector canonical_sign(Vector v) {
  const double scale = v.norm();
  for (int i = 0; i < v.size(); ++i) {
    if (std::abs(v[i]) > tol::kExact * scale) {
      if (v[i] < 0) v = -v;
      break;
    }
  }
  return v;
}
}  // namespace detail

class Flag {
 public:
  // line: spanning unit vector; normal: unit vector with hyperplane = normal^perp.
  Flag(Vector line, Vector normal)
      : line_(detail::canonical_sign(line / line.norm())),
        normal_(detail::canonical_sign(normal / normal.norm())) {
    if (line_.size() != normal_.size())
      throw std::invalid_argument("Flag: dimension mismatch");
    if (std::abs(line_.dot(normal_)) > tol::kUnit)
      throw std::invalid_argument("Flag: line not incident to hyperplane");
  }

  const Vector& line() const { return line_; }
  const Vector& normal() const { return normal_; }
  int dim() const { return static_cast<int>(line_.size()); }

 private:
  Vector line_, normal_;
};

// Representatives of a flag in the orthonormal frame of x: vectors transform
// by x^{-1/2}, normals by x^{1/2}.
struct FlagFrame {
  Vector line;    // unit
  Vector normal;  // unit, orthogonal to line
};

inline FlagFrame flag_in_frame(const Flag& f, const BasePoint& x) {
  Vector l = x.inverse_sqrt() * f.line();
  Vector n = x.sqrt() * f.normal();
  l /= l.norm();
  n /= n.norm();
  return {std::move(l), std::move(n)};
}

struct HorosphericalValue {
  double value;
};

// SVD-based attracting flag: line = first left singular vector, hyperplane =
// span of the first k left singular vectors, computed in the x-frame.
inline Flag attracting_flag(const SquareMatrix& g, const BasePoint& x,
                            double gap_tolerance = tol::kGapTolerance) {
  const CartanVector sigma = cartan_projection(g, x);
  const int kp1 = sigma.size();
  if (sigma[0] - sigma[1] <= gap_tolerance || sigma[kp1 - 2] - sigma[kp1 - 1] <= gap_tolerance)
    throw std::domain_error("attracting_flag: non-regular element (singular value gap below tolerance)");
  const Matrix m = x.inverse_sqrt() * g.entries() * x.sqrt();
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullU);
  const Matrix& u = svd.matrixU();
  // back to ambient coordinates: vectors by x^{1/2}, normals by x^{-1/2}
  Vector line = x.sqrt() * u.col(0);
  Vector normal = x.inverse_sqrt() * u.col(kp1 - 1);
  return Flag(line / line.norm(), normal / normal.norm());
}

// Attracting flag of an accumulated pair. The line is the top left singular
// vector of the forward mover; the normal, which is the bottom left singular
// vector of the forward mover, is read instead as the top right singular
// vector of the inverse mover, where it is well conditioned for deep words.
inline Flag attracting_flag(const GroupPair& g, const BasePoint& x,
                            double gap_tolerance = tol::kGapTolerance) {
  const CartanVector sigma = cartan_projection(g, x);
  const int kp1 = sigma.size();
  if (sigma[0] - sigma[1] <= gap_tolerance || sigma[kp1 - 2] - sigma[kp1 - 1] <= gap_tolerance)
    throw std::domain_error("attracting_flag: non-regular element (singular value gap below tolerance)");
  Eigen::JacobiSVD<Matrix> fwd(x.inverse_sqrt() * g.m * x.sqrt(), Eigen::ComputeFullU);
  Eigen::JacobiSVD<Matrix> bwd(x.inverse_sqrt() * g.minv * x.sqrt(), Eigen::ComputeFullV);
  Vector line = x.sqrt() * fwd.matrixU().col(0);
  Vector normal = x.inverse_sqrt() * bwd.matrixV().col(0);
  return Flag(line / line.norm(), normal / normal.norm());
}

// Action on flags: lines transform by g, normals by the inverse transpose.
inline Flag apply(const SquareMatrix& g, const Flag& f) {
  Vector l = g.entries() * f.line();
  Vector n = g.entries().inverse().transpose() * f.normal();
  return Flag(l / l.norm(), n / n.norm());
}

inline bool antipodal(const Flag& f1, const Flag& f2,
                      double tolerance = tol::kAntipodality) {
  return std::abs(f1.line().dot(f2.normal())) > tolerance &&
         std::abs(f2.line().dot(f1.normal())) > tolerance;
}

// Orthonormal frame adapted to the flag at basepoint x: first column spans
// the line, first k columns span the hyperplane, all in the x-frame.
inline Matrix adapted_frame(const Flag& f, const BasePoint& x) {
  const FlagFrame ff = flag_in_frame(f, x);
  const int kp1 = f.dim();
  Matrix pair(kp1, 2);
  pair.col(0) = ff.line;
  pair.col(1) = ff.normal;  // exactly orthogonal to the line by incidence
  Eigen::HouseholderQR<Matrix> qr(pair);
  Matrix q = qr.householderQ();
  Matrix frame(kp1, kp1);
  frame.col(0) = ff.line;
  frame.col(kp1 - 1) = ff.normal;
  for (int j = 2; j < kp1; ++j) frame.col(j - 1) = q.col(j);
  return frame;
}

// Point at Finsler parameter t along the ray from x toward the ideal point
// of type theta in the star of tau.
inline BasePoint flat_point_toward(const BasePoint& x, const Flag& tau,
                                   const TypeVector& theta, double t) {
  const Matrix q = adapted_frame(tau, x);
  const Vector expo = (2.0 * t) * theta.theta();
  if (expo.cwiseAbs().maxCoeff() > 350.0)
    throw std::domain_error("flat_point_toward: exponent overflow");
  const Matrix core = q * expo.array().exp().matrix().asDiagonal() * q.transpose();
  return BasePoint(x.sqrt() * core * x.sqrt());
}

namespace detail {
// d_F(p, z_t) for z_t = x^{1/2} Q e^{2t theta} Q^T x^{1/2} on the ray from x
// toward tau with adapted frame q. The mover pair (w, winv) encodes p:
// exp(d_Delta(p, z_t)) are the singular values of w q e^{t theta}, with the
// small extreme recovered from winv so large t stays well conditioned.
// Requires the line-hyperplane theta shape (middle entries zero), which makes
// d_F depend on the extreme singular values only.
inline double finsler_to_ray(const Matrix& w, const Matrix& winv, const Matrix& q,
                             const TypeVector& theta, double t) {
  const int kp1 = theta.size();
  for (int i = 1; i + 1 < kp1; ++i)
    if (std::abs(theta.theta()[i]) > tol::kExact)
      throw std::invalid_argument("finsler_to_ray: type vector must have line-hyperplane shape");
  const Vector expo = t * theta.theta();
  if (expo.cwiseAbs().maxCoeff() > 350.0)
    throw std::domain_error("finsler_to_ray: exponent overflow");
  const Vector e = expo.array().exp();
  const Matrix b = w * q * e.asDiagonal();
  const Matrix binv = e.cwiseInverse().asDiagonal() * q.transpose() * winv;
  const double s_top = Eigen::JacobiSVD<Matrix>(b).singularValues()[0];
  const double s_bot = Eigen::JacobiSVD<Matrix>(binv).singularValues()[0];
  Vector sigma = Vector::Zero(kp1);
  sigma[0] = std::log(s_top);
  sigma[kp1 - 1] = -std::log(s_bot);
  return killing_inner(sigma, theta.theta());
}

inline double busemann_limit(const Matrix& wy, const Matrix& wy_inv, const BasePoint& x,
                             const Flag& tau, const TypeVector& theta, double d_R,
                             double base_t) {
  const Matrix q = adapted_frame(tau, x);
  const int n = x.dim();
  const Matrix id = Matrix::Identity(n, n);
  const double t1 = std::max(base_t, 1.5 * d_R + 20.0);
  const auto eval = [&](double t) {
    return finsler_to_ray(id, id, q, theta, t) - finsler_to_ray(wy, wy_inv, q, theta, t);
  };
  const double v1 = eval(t1);
  const double v2 = eval(2.0 * t1);
  // the achievable precision degrades with the mover's condition number: the
  // top singular values carry a relative error of order eps * kappa(wy)
  const double log_kappa =
      std::log(Eigen::JacobiSVD<Matrix>(wy).singularValues()[0]) +
      std::log(Eigen::JacobiSVD<Matrix>(wy_inv).singularValues()[0]);
  const double tolerance =
      std::max(tol::kBusemann,
               64.0 * std::numeric_limits<double>::epsilon() *
                   std::exp(std::min(std::max(log_kappa, 0.0), 690.0)));
  if (std::abs(v2 - v1) > tolerance)
    throw std::domain_error("busemann_cocycle: limit did not converge (values " +
                            std::to_string(v1) + ", " + std::to_string(v2) + ")");
  return v2;
}
}  // namespace detail

// Horospherical signed distance b_tau(x) - b_tau(y), computed as the limit
// of d_F(x, z_t) - d_F(y, z_t) along a ray toward tau, with a doubling check.
inline double busemann_cocycle(const BasePoint& x, const BasePoint& y, const Flag& tau,
                               const TypeVector& theta, double base_t = 60.0) {
  return detail::busemann_limit(y.inverse_sqrt() * x.sqrt(), x.inverse_sqrt() * y.sqrt(), x,
                                tau, theta, riemannian_distance(x, y), base_t);
}

// b_tau(x) - b_tau(g.x0) through the accumulated pair; the mover for g.x0 is
// w = x0^{-1/2} g^{-1} x^{1/2}, whose extreme singular values stay relatively
// accurate for deep products.
inline double busemann_orbit(const BasePoint& x, const BasePoint& x0, const GroupPair& g,
                             const Flag& tau, const TypeVector& theta, double base_t = 60.0) {
  return detail::busemann_limit(x0.inverse_sqrt() * g.minv * x.sqrt(),
                                x.inverse_sqrt() * g.m * x0.sqrt(), x, tau, theta,
                                orbit_riemannian_distance(x, x0, g), base_t);
}

// Closed-form Gromov product for the (1,k) type:
//   <f1|f2>_x = -(sqrt(k+1)/2) log( sin<(l1,h2) sin<(l2,h1) ),
// angles measured in the x-inner product. Returns +infinity when the flags
// are not antipodal.
inline double gromov_product(const Flag& f1, const Flag& f2, const BasePoint& x) {
  const FlagFrame a = flag_in_frame(f1, x);
  const FlagFrame b = flag_in_frame(f2, x);
  const double s12 = std::abs(a.line.dot(b.normal));  // sin of angle(line1, hyperplane2)
  const double s21 = std::abs(b.line.dot(a.normal));
  if (s12 <= tol::kAntipodality || s21 <= tol::kAntipodality)
    return std::numeric_limits<double>::infinity();
  const double kp1 = static_cast<double>(f1.dim());
  return -0.5 * std::sqrt(kp1) * (std::log(s12) + std::log(s21));
}

// A point on the parallel set spanned by an antipodal pair, built from the
// frame (line1, hyperplane1 \cap hyperplane2 basis, line2) in the x-frame.
inline BasePoint parallel_set_point(const Flag& f1, const Flag& f2, const BasePoint& x) {
  if (!antipodal(f1, f2))
    throw std::invalid_argument("parallel_set_point: flags not antipodal");
  const FlagFrame a = flag_in_frame(f1, x);
  const FlagFrame b = flag_in_frame(f2, x);
  const int kp1 = f1.dim();
  Matrix v(kp1, kp1);
  v.col(0) = a.line;
  v.col(kp1 - 1) = b.line;
  if (kp1 > 2) {
    // intersection of the two hyperplanes = nullspace of [n1 n2]^T
    Matrix normals(kp1, 2);
    normals.col(0) = a.normal;
    normals.col(1) = b.normal;
    Eigen::HouseholderQR<Matrix> qr(normals);
    Matrix q = qr.householderQ();
    for (int j = 2; j < kp1; ++j) v.col(j - 1) = q.col(j);
  }
  const Matrix core = v * v.transpose();
  return BasePoint(x.sqrt() * core * x.sqrt());
}

// exp(-eps <f1|f2>_x), with the non-antipodal case mapping to 0.
inline double gromov_premetric(const Flag& f1, const Flag& f2, const BasePoint& x, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("gromov_premetric: eps must be positive");
  const double gp = gromov_product(f1, f2, x);
  if (std::isinf(gp)) return 0.0;
  return std::exp(-eps * gp);
}

// Conformal expansion factor E(g, tau) = exp(-eps d^hor_tau(g^{-1} x, x)).
inline double conformal_expansion(const SquareMatrix& g, const Flag& tau, const BasePoint& x,
                                  double eps, const TypeVector& theta) {
  const Matrix ginv = g.entries().inverse();
  const BasePoint gx(ginv * x.matrix() * ginv.transpose());
  return std::exp(-eps * busemann_cocycle(gx, x, tau, theta));
}

// Same factor for an accumulated pair; b_tau(g^{-1}.x) - b_tau(x) is minus
// the orbit cocycle of g^{-1} based at x.
inline double conformal_expansion(const GroupPair& g, const Flag& tau, const BasePoint& x,
                                  double eps, const TypeVector& theta) {
  return std::exp(eps * busemann_orbit(x, x, g.inverse(), tau, theta));
}

// Gromov product of an orbit point with a flag, as seen from x:
//   <y|tau>_x = (d_F(x,y) + d^hor_tau(x,y)) / 2.
inline double orbit_flag_product(const BasePoint& x, const BasePoint& y, const Flag& tau,
                                 const TypeVector& theta) {
  return 0.5 * (finsler_distance(x, y, theta) + busemann_cocycle(x, y, tau, theta));
}

inline double orbit_flag_product(const BasePoint& x, const BasePoint& x0, const GroupPair& g,
                                 const Flag& tau, const TypeVector& theta) {
  return 0.5 * (orbit_finsler_distance(x, x0, g, theta) + busemann_orbit(x, x0, g, tau, theta));
}

// Proxy shadow membership: tau lies in the shadow of B(center, r) from x iff
// the orbit-flag Gromov product defect is at most kappa * r.
inline bool shadow_contains_proxy(const BasePoint& x, const BasePoint& center, double r,
                                  const Flag& tau, const TypeVector& theta,
                                  double kappa = 1.0) {
  if (!(r > 0.0)) throw std::invalid_argument("shadow_contains_proxy: r must be positive");
  const double df = finsler_distance(x, center, theta);
  return orbit_flag_product(x, center, tau, theta) >= df - kappa * r;
}

// Shadow proxy for an orbit point g.x0 through the accumulated pair.
inline bool shadow_contains_proxy(const BasePoint& x, const BasePoint& x0, const GroupPair& g,
                                  double r, const Flag& tau, const TypeVector& theta,
                                  double kappa = 1.0) {
  if (!(r > 0.0)) throw std::invalid_argument("shadow_contains_proxy: r must be positive");
  const double df = orbit_finsler_distance(x, x0, g, theta);
  return orbit_flag_product(x, x0, g, tau, theta) >= df - kappa * r;
}

}  // namespace anosov
