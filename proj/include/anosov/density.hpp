#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "anosov/flag_boundary.hpp"
#include "anosov/hausdorff.hpp"
#include "anosov/orbit_engine.hpp"
#include "anosov/product_geometry.hpp"
#include "anosov/tolerances.hpp"

// Discrete conformal densities built from orbit balls: atoms at the
// attracting flags of regular elements with weights exp(-s d_F(x, orbit)),
// normalized by the finite-ball sum at the enumeration basepoint. Reports for
// the shadow-mass bounds, basepoint conformality, and agreement with the
// covering measure of the dimension estimator.

namespace anosov {

template <class FlagT, class PointT>
struct PointMassMeasure {
  std::vector<FlagT> atoms;
  std::vector<double> weights;
  std::vector<std::size_t> element_index;  // position in the source ball
  PointT basepoint;
  double s_parameter = 0.0;
  double total_mass = 0.0;
};

using SlMeasure = PointMassMeasure<Flag, BasePoint>;
using ProductMeasure = PointMassMeasure<ProductFlag, ProductPoint>;

// weights exp(-s d_F(x, gamma x0)) over the regular elements, divided by the
// finite-ball sum of exp(-s d_F(x0, gamma x0)); a probability measure when
// x equals the enumeration basepoint.
inline SlMeasure ps_measure(const OrbitBall<SlOrbitModel>& ball, double s, const BasePoint& x) {
  const BasePoint& x0 = ball.model.x;
  const bool at_base = (x.matrix() - x0.matrix()).cwiseAbs().maxCoeff() < tol::kExact;
  SlMeasure mu{{}, {}, {}, x, s, 0.0};
  double z = 0.0;
  for (std::size_t i = 0; i < ball.elements.size(); ++i) {
    const auto& e = ball.elements[i];
    if (!e.flag) continue;
    z += std::exp(-s * e.d_F);
    mu.atoms.push_back(*e.flag);
    mu.element_index.push_back(i);
    const double d = at_base ? e.d_F
                             : orbit_finsler_distance(x, x0, e.matrix, ball.model.theta);
    mu.weights.push_back(std::exp(-s * d));
  }
  if (mu.atoms.empty())
    throw std::domain_error("ps_measure: no regular elements in the ball");
  for (double& w : mu.weights) {
    w /= z;
    mu.total_mass += w;
  }
  return mu;
}

inline ProductMeasure ps_measure(const OrbitBall<ProductOrbitModel>& ball, double s,
                                 const ProductPoint& x) {
  const ProductPoint x0 = ProductPoint::base();
  const UpperHalfPlanePoint i2{0.0, 1.0};
  const bool at_base = std::abs(x.z1 - i2) + std::abs(x.z2 - i2) < tol::kExact;
  ProductMeasure mu{{}, {}, {}, x, s, 0.0};
  double z = 0.0;
  for (std::size_t i = 0; i < ball.elements.size(); ++i) {
    const auto& e = ball.elements[i];
    if (!e.flag) continue;
    z += std::exp(-s * e.d_F);
    mu.atoms.push_back(*e.flag);
    mu.element_index.push_back(i);
    double d = e.d_F;
    if (!at_base) {
      const ProductPoint y(moebius(e.matrix.first, i2), moebius(e.matrix.second, i2));
      d = product_finsler_distance(x, y);
    }
    mu.weights.push_back(std::exp(-s * d));
  }
  if (mu.atoms.empty())
    throw std::domain_error("ps_measure: no regular elements in the ball");
  for (double& w : mu.weights) {
    w /= z;
    mu.total_mass += w;
  }
  return mu;
}

// mass of the premetric ball of the given radius around a flag, with the
// premetric evaluated at a fixed reference basepoint
inline double premetric_ball_mass(const SlMeasure& mu, const Flag& center, double radius,
                                  const BasePoint& x_ref, double eps) {
  double m = 0.0;
  for (std::size_t i = 0; i < mu.atoms.size(); ++i)
    if (gromov_premetric(mu.atoms[i], center, x_ref, eps) <= radius) m += mu.weights[i];
  return m;
}

inline double premetric_ball_mass(const ProductMeasure& mu, const ProductFlag& center,
                                  double radius, const ProductPoint& x_ref, double eps) {
  double m = 0.0;
  for (std::size_t i = 0; i < mu.atoms.size(); ++i)
    if (product_gromov_premetric(mu.atoms[i], center, x_ref, eps) <= radius)
      m += mu.weights[i];
  return m;
}

struct ConformalReport {
  double mass_moved = 0.0;    // region mass under the moved-basepoint measure
  double mass_base = 0.0;     // region mass under the base measure
  double ratio = 0.0;
  double predicted = 0.0;     // exp(-s * horospherical displacement)
  double relative_deviation = 0.0;
};

// Radon-Nikodym check on one premetric-ball region: the measured mass ratio
// against exp(-s d^hor_center(x, x0)). Both measures must share the source
// ball and s; the region is measured at the base measure's basepoint.
inline ConformalReport conformal_ratio_check(const SlMeasure& mu_x, const SlMeasure& mu_x0,
                                             const Flag& center, double radius, double eps,
                                             const TypeVector& theta) {
  if (mu_x.atoms.size() != mu_x0.atoms.size() ||
      std::abs(mu_x.s_parameter - mu_x0.s_parameter) > tol::kExact)
    throw std::invalid_argument("conformal_ratio_check: measures not from the same ball and s");
  ConformalReport rep;
  rep.mass_moved = premetric_ball_mass(mu_x, center, radius, mu_x0.basepoint, eps);
  rep.mass_base = premetric_ball_mass(mu_x0, center, radius, mu_x0.basepoint, eps);
  if (rep.mass_base < tol::kMassFloor || rep.mass_moved < tol::kMassFloor)
    throw std::domain_error("conformal_ratio_check: region mass below the mass floor");
  rep.ratio = rep.mass_moved / rep.mass_base;
  rep.predicted =
      std::exp(-mu_x.s_parameter *
               busemann_cocycle(mu_x.basepoint, mu_x0.basepoint, center, theta));
  rep.relative_deviation = std::abs(rep.ratio - rep.predicted) / rep.predicted;
  return rep;
}

struct ShadowReport {
  double r = 0.0;
  double beta = 0.0;
  int annulus_count = 0;
  std::vector<double> masses;  // shadow mass per annulus element
  std::vector<double> ratios;  // mass / exp(-beta d_F)
  double min_ratio = 0.0, max_ratio = 0.0;
  double empirical_c = 0.0;    // sqrt(max/min)
};

namespace detail {

template <class Measure, class Ball, class Member>
ShadowReport shadow_report_impl(const Measure& mu, const Ball& ball, double r, double beta,
                                int threads, Member&& member, double annulus_radius) {
  if (r < tol::kShadowRadiusMin)
    throw std::invalid_argument("shadow_lemma_report: radius below the proxy minimum");
  const double rc =
      annulus_radius > 0.0 ? annulus_radius : completeness_radius(ball, MetricTag::F);
  std::vector<std::size_t> annulus;
  for (std::size_t i = 0; i < ball.elements.size(); ++i) {
    const auto& e = ball.elements[i];
    if (e.flag && e.d_F >= rc / 3.0 && e.d_F <= 2.0 * rc / 3.0) annulus.push_back(i);
  }
  if (annulus.empty()) throw std::domain_error("shadow_lemma_report: empty mid-annulus");
  ShadowReport rep;
  rep.r = r;
  rep.beta = beta;
  rep.annulus_count = static_cast<int>(annulus.size());
  rep.masses.assign(annulus.size(), 0.0);
  rep.ratios.assign(annulus.size(), 0.0);
  parallel_for(annulus.size(), threads, [&](std::size_t k) {
    const auto& e = ball.elements[annulus[k]];
    double m = 0.0;
    for (std::size_t a = 0; a < mu.atoms.size(); ++a)
      if (member(e, mu.atoms[a])) m += mu.weights[a];
    rep.masses[k] = m;
    rep.ratios[k] = m * std::exp(beta * e.d_F);
  });
  rep.min_ratio = *std::min_element(rep.ratios.begin(), rep.ratios.end());
  rep.max_ratio = *std::max_element(rep.ratios.begin(), rep.ratios.end());
  rep.empirical_c = rep.min_ratio > 0.0 ? std::sqrt(rep.max_ratio / rep.min_ratio)
                                        : std::numeric_limits<double>::infinity();
  return rep;
}

}  // namespace detail

// Shadow masses in the mid-annulus (the frontier third is excluded as
// truncation-biased) against exp(-beta d_F); the empirical constant is the
// geometric half-spread of the ratios.
// annulus_radius pins the annulus to a given completeness radius (for
// comparing truncation depths over the same element set); 0 uses the ball's.
inline ShadowReport shadow_lemma_report(const SlMeasure& mu, const OrbitBall<SlOrbitModel>& ball,
                                        double r, double beta, int threads = 1,
                                        double annulus_radius = 0.0) {
  return detail::shadow_report_impl(
      mu, ball, r, beta, threads,
      [&](const OrbitElement<SlOrbitModel>& e, const Flag& tau) {
        return shadow_contains_proxy(ball.model.x, ball.model.x, e.matrix, r, tau,
                                     ball.model.theta);
      },
      annulus_radius);
}

inline ShadowReport shadow_lemma_report(const ProductMeasure& mu,
                                        const OrbitBall<ProductOrbitModel>& ball, double r,
                                        double beta, int threads = 1,
                                        double annulus_radius = 0.0) {
  const ProductPoint x = ProductPoint::base();
  const UpperHalfPlanePoint i2{0.0, 1.0};
  return detail::shadow_report_impl(
      mu, ball, r, beta, threads,
      [&](const OrbitElement<ProductOrbitModel>& e, const ProductFlag& tau) {
        const ProductPoint y(moebius(e.matrix.first, i2), moebius(e.matrix.second, i2));
        const double b = product_busemann(x, y, tau);
        return 0.5 * (e.d_F + b) >= e.d_F - r;
      },
      annulus_radius);
}

struct MatchedBallReport {
  double max_relative_discrepancy = 0.0;
  int regions_compared = 0;
  bool support_mismatch = false;
};

// Normalized masses of matched premetric balls (10 centers, 3 radii) for two
// weight vectors over the same cloud; the relative discrepancy per region is
// |a - b| / max(a, b).
inline MatchedBallReport matched_ball_report(const std::vector<double>& wa,
                                             const std::vector<double>& wb,
                                             const PremetricCloud& cloud) {
  const int n = cloud.size();
  if (static_cast<int>(wa.size()) != n || static_cast<int>(wb.size()) != n)
    throw std::invalid_argument("matched_ball_report: weight count must match the cloud");
  double ta = 0.0, tb = 0.0;
  for (int i = 0; i < n; ++i) {
    ta += wa[i];
    tb += wb[i];
  }
  if (!(ta > 0.0) || !(tb > 0.0))
    throw std::invalid_argument("matched_ball_report: zero total mass");
  MatchedBallReport rep;
  const int centers = std::min(10, n);
  for (int c = 0; c < centers; ++c) {
    const int ci = c * n / centers;
    for (double frac : {0.2, 0.4, 0.6}) {
      const double radius = frac * cloud.diameter();
      double ma = 0.0, mb = 0.0;
      for (int j = 0; j < n; ++j)
        if (cloud.at(std::max(ci, j), std::min(ci, j)) <= radius || j == ci) {
          ma += wa[j];
          mb += wb[j];
        }
      ma /= ta;
      mb /= tb;
      if (ma < tol::kMassFloor && mb < tol::kMassFloor) continue;
      ++rep.regions_compared;
      const double rel = std::abs(ma - mb) / std::max(ma, mb);
      rep.max_relative_discrepancy = std::max(rep.max_relative_discrepancy, rel);
      if (rel > 0.9 && std::max(ma, mb) > 0.05) rep.support_mismatch = true;
    }
  }
  if (rep.regions_compared == 0)
    throw std::domain_error("matched_ball_report: no region above the mass floor");
  return rep;
}

// Agreement between the conformal density and the dimension estimator's
// covering measure: each cloud point carries its cell's diam^beta share,
// split evenly inside the cell. The cloud must list the measure's atoms in
// order (both from the same ball).
template <class FlagT, class PointT>
MatchedBallReport ps_vs_hausdorff_comparison(const PointMassMeasure<FlagT, PointT>& mu,
                                             const PremetricCloud& cloud, double beta,
                                             double scale) {
  if (static_cast<int>(mu.atoms.size()) != cloud.size())
    throw std::invalid_argument(
        "ps_vs_hausdorff_comparison: measure and cloud must come from the same ball");
  const auto rec = greedy_cover(cloud, scale, beta);
  std::vector<double> cell_value(rec.cover_size, 0.0);
  std::vector<int> cell_count(rec.cover_size, 0);
  std::vector<std::vector<int>> cells(rec.cover_size);
  for (int i = 0; i < cloud.size(); ++i) {
    cells[rec.assignment[i]].push_back(i);
    ++cell_count[rec.assignment[i]];
  }
  for (int c = 0; c < rec.cover_size; ++c) {
    double diam = 0.0;
    for (std::size_t a = 0; a < cells[c].size(); ++a)
      for (std::size_t b = 0; b < a; ++b)
        diam = std::max(diam, cloud.at(cells[c][a], cells[c][b]));
    cell_value[c] = beta == 0.0 ? 1.0 : std::pow(diam, beta);
  }
  std::vector<double> nu(cloud.size(), 0.0);
  double total = 0.0;
  for (int i = 0; i < cloud.size(); ++i) {
    nu[i] = cell_value[rec.assignment[i]] / cell_count[rec.assignment[i]];
    total += nu[i];
  }
  if (!(total > 0.0))
    throw std::domain_error("ps_vs_hausdorff_comparison: covering measure vanishes");
  return matched_ball_report(mu.weights, nu, cloud);
}

}  // namespace anosov
