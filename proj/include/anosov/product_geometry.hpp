#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <limits>
#include <stdexcept>
#include <vector>

#include "anosov/tolerances.hpp"

// The rank-2 model X = H^2 x H^2. Each factor is the upper half-plane with
// the curvature -1 metric; boundary points live on R u {inf}. The Finsler
// metric carries the rescaling d_F = (d_1 + d_2)/2, and Busemann functions
// are closed forms normalized at the base point (i, i).

namespace anosov {

using UpperHalfPlanePoint = std::complex<double>;

inline double hyperbolic_distance(UpperHalfPlanePoint z, UpperHalfPlanePoint w) {
  if (!(z.imag() > 0.0) || !(w.imag() > 0.0))
    throw std::invalid_argument("hyperbolic_distance: points must have positive imaginary part");
  const double q = std::norm(z - w) / (2.0 * z.imag() * w.imag());
  return std::acosh(1.0 + q);
}

// Boundary point of H^2: a real number or the point at infinity.
struct BoundaryPoint {
  double value = 0.0;
  bool at_infinity = false;

  static BoundaryPoint infinity() { return {0.0, true}; }
  static BoundaryPoint finite(double v) { return {v, false}; }
};

// Chordal separation on the circle R u {inf}; zero iff the points coincide.
inline double boundary_chordal(const BoundaryPoint& a, const BoundaryPoint& b) {
  if (a.at_infinity && b.at_infinity) return 0.0;
  if (a.at_infinity) return 1.0 / std::sqrt(1.0 + b.value * b.value);
  if (b.at_infinity) return 1.0 / std::sqrt(1.0 + a.value * a.value);
  return std::abs(a.value - b.value) /
         std::sqrt((1.0 + a.value * a.value) * (1.0 + b.value * b.value));
}

// Busemann function at xi normalized at i: b_xi(i) = 0.
inline double busemann_h2(const BoundaryPoint& xi, UpperHalfPlanePoint z) {
  if (!(z.imag() > 0.0)) throw std::invalid_argument("busemann_h2: not an interior point");
  if (xi.at_infinity) return -std::log(z.imag());
  const double d2 = std::norm(z - UpperHalfPlanePoint(xi.value, 0.0));
  return std::log(d2 / z.imag()) - std::log(1.0 + xi.value * xi.value);
}

// Gromov product <xi|eta>_z = log( |z-xi| |z-eta| / (Im z |xi-eta|) ), with
// infinity branches; +inf when the boundary points coincide.
inline double gromov_product_h2(const BoundaryPoint& xi, const BoundaryPoint& eta,
                                UpperHalfPlanePoint z) {
  if (boundary_chordal(xi, eta) <= tol::kExact)
    return std::numeric_limits<double>::infinity();
  const double y = z.imag();
  if (xi.at_infinity) return std::log(std::abs(z - UpperHalfPlanePoint(eta.value, 0.0)) / y);
  if (eta.at_infinity) return std::log(std::abs(z - UpperHalfPlanePoint(xi.value, 0.0)) / y);
  const double a = std::abs(z - UpperHalfPlanePoint(xi.value, 0.0));
  const double b = std::abs(z - UpperHalfPlanePoint(eta.value, 0.0));
  return std::log(a * b / (y * std::abs(xi.value - eta.value)));
}

// Moebius action of a unit-determinant 2x2 matrix.
inline UpperHalfPlanePoint moebius(const Eigen::Matrix2d& g, UpperHalfPlanePoint z) {
  const UpperHalfPlanePoint num = g(0, 0) * z + UpperHalfPlanePoint(g(0, 1), 0.0);
  const UpperHalfPlanePoint den = g(1, 0) * z + UpperHalfPlanePoint(g(1, 1), 0.0);
  return num / den;
}

inline BoundaryPoint moebius_boundary(const Eigen::Matrix2d& g, const BoundaryPoint& xi) {
  if (xi.at_infinity) {
    if (std::abs(g(1, 0)) < tol::kExact * std::abs(g(0, 0))) return BoundaryPoint::infinity();
    return BoundaryPoint::finite(g(0, 0) / g(1, 0));
  }
  const double den = g(1, 0) * xi.value + g(1, 1);
  const double num = g(0, 0) * xi.value + g(0, 1);
  if (std::abs(den) < tol::kExact * (std::abs(num) + 1.0)) return BoundaryPoint::infinity();
  return BoundaryPoint::finite(num / den);
}

struct ProductPoint {
  UpperHalfPlanePoint z1, z2;

  ProductPoint(UpperHalfPlanePoint a, UpperHalfPlanePoint b) : z1(a), z2(b) {
    if (!(z1.imag() > 0.0) || !(z2.imag() > 0.0))
      throw std::invalid_argument("ProductPoint: imaginary parts must be positive");
  }
  static ProductPoint base() { return ProductPoint({0.0, 1.0}, {0.0, 1.0}); }
};

struct ProductFlag {
  BoundaryPoint xi1, xi2;
};

// d_F = (d_1 + d_2)/2.
inline double product_finsler_distance(const ProductPoint& x, const ProductPoint& y) {
  return 0.5 * (hyperbolic_distance(x.z1, y.z1) + hyperbolic_distance(x.z2, y.z2));
}

// Riemannian product metric.
inline double product_riemannian_distance(const ProductPoint& x, const ProductPoint& y) {
  const double d1 = hyperbolic_distance(x.z1, y.z1);
  const double d2 = hyperbolic_distance(x.z2, y.z2);
  return std::sqrt(d1 * d1 + d2 * d2);
}

// d^hor_tau(x, y) = (b^1 + b^2)/2, exact cocycle by construction.
inline double product_busemann(const ProductPoint& x, const ProductPoint& y,
                               const ProductFlag& tau) {
  const double b1 = busemann_h2(tau.xi1, x.z1) - busemann_h2(tau.xi1, y.z1);
  const double b2 = busemann_h2(tau.xi2, x.z2) - busemann_h2(tau.xi2, y.z2);
  return 0.5 * (b1 + b2);
}

inline double product_gromov_product(const ProductFlag& t1, const ProductFlag& t2,
                                     const ProductPoint& x) {
  const double g1 = gromov_product_h2(t1.xi1, t2.xi1, x.z1);
  const double g2 = gromov_product_h2(t1.xi2, t2.xi2, x.z2);
  if (std::isinf(g1) || std::isinf(g2)) return std::numeric_limits<double>::infinity();
  return 0.5 * (g1 + g2);
}

inline double product_gromov_premetric(const ProductFlag& t1, const ProductFlag& t2,
                                       const ProductPoint& x, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("product_gromov_premetric: eps must be positive");
  const double gp = product_gromov_product(t1, t2, x);
  if (std::isinf(gp)) return 0.0;
  return std::exp(-eps * gp);
}

// Attracting boundary point of a 2x2 matrix: image of the top left singular
// vector under [x : y] -> x/y. Throws when the singular value gap is below
// tolerance.
inline BoundaryPoint attracting_boundary_point(const Eigen::Matrix2d& g,
                                               double gap_tolerance = tol::kGapTolerance) {
  Eigen::JacobiSVD<Eigen::Matrix2d> svd(g, Eigen::ComputeFullU);
  const double s1 = svd.singularValues()[0];
  const double s2 = svd.singularValues()[1];
  if (std::log(s1) - std::log(s2) <= gap_tolerance)
    throw std::domain_error("attracting_boundary_point: non-regular element");
  const Eigen::Vector2d u = svd.matrixU().col(0);
  if (std::abs(u[1]) < tol::kExact) return BoundaryPoint::infinity();
  return BoundaryPoint::finite(u[0] / u[1]);
}

// A pair of matched Fuchsian generator lists (gamma, phi gamma).
struct RepresentationPair {
  std::vector<Eigen::Matrix2d> generators_1;
  std::vector<Eigen::Matrix2d> generators_2;

  RepresentationPair(std::vector<Eigen::Matrix2d> g1, std::vector<Eigen::Matrix2d> g2)
      : generators_1(std::move(g1)), generators_2(std::move(g2)) {
    if (generators_1.size() != generators_2.size())
      throw std::invalid_argument("RepresentationPair: generator lists of unequal length");
    for (auto* list : {&generators_1, &generators_2})
      for (auto& m : *list) {
        const double det = m.determinant();
        if (!(det > 0.0)) throw std::invalid_argument("RepresentationPair: determinant not positive");
        m /= std::sqrt(det);
      }
  }
};

struct DiagonalOrbitPoint {
  ProductPoint point;
  double d1, d2;          // per-factor distances from (i, i)
  double d_F, d_R;
  ProductFlag flag;       // valid iff regular
  bool regular;
};

// Evaluate a word (negative index = inverse, 1-based) in both factors.
inline DiagonalOrbitPoint diagonal_orbit_adapter(const RepresentationPair& rep,
                                                 const std::vector<int>& word) {
  Eigen::Matrix2d m1 = Eigen::Matrix2d::Identity();
  Eigen::Matrix2d m2 = Eigen::Matrix2d::Identity();
  for (int letter : word) {
    const int idx = std::abs(letter) - 1;
    if (letter == 0 || idx >= static_cast<int>(rep.generators_1.size()))
      throw std::invalid_argument("diagonal_orbit_adapter: invalid word index");
    if (letter > 0) {
      m1 = m1 * rep.generators_1[idx];
      m2 = m2 * rep.generators_2[idx];
    } else {
      m1 = m1 * rep.generators_1[idx].inverse();
      m2 = m2 * rep.generators_2[idx].inverse();
    }
  }
  DiagonalOrbitPoint out{ProductPoint(moebius(m1, {0.0, 1.0}), moebius(m2, {0.0, 1.0})),
                         0, 0, 0, 0, {}, false};
  out.d1 = hyperbolic_distance({0.0, 1.0}, out.point.z1);
  out.d2 = hyperbolic_distance({0.0, 1.0}, out.point.z2);
  out.d_F = 0.5 * (out.d1 + out.d2);
  out.d_R = std::sqrt(out.d1 * out.d1 + out.d2 * out.d2);
  try {
    out.flag = {attracting_boundary_point(m1), attracting_boundary_point(m2)};
    out.regular = true;
  } catch (const std::domain_error&) {
    out.regular = false;
  }
  return out;
}

}  // namespace anosov
