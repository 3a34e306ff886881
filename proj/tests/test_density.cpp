#include "doctest.h"

#include <cmath>

#include "anosov/density.hpp"
#include "anosov/presets.hpp"

using namespace anosov;

namespace {

SlOrbitModel schottky_model() {
  return {SlPresentation(presets::schottky_sym2_generators()), BasePoint::identity(3),
          TypeVector::line_hyperplane(3)};
}

SlOrbitModel cyclic_model() {
  return {SlPresentation(presets::cyclic_generators()), BasePoint::identity(3),
          TypeVector::line_hyperplane(3)};
}

std::vector<Flag> measure_flags(const SlMeasure& mu) { return mu.atoms; }

}  // namespace

TEST_CASE("ps measure construction") {
  // only the identity: no regular element carries an atom
  const SlOrbitModel trivial{SlPresentation({}, 3), BasePoint::identity(3),
                             TypeVector::line_hyperplane(3)};
  const auto empty_ball = enumerate_ball(trivial, 2);
  CHECK_THROWS_AS(ps_measure(empty_ball, 1.0, BasePoint::identity(3)), std::domain_error);

  const auto ball = enumerate_ball(schottky_model(), 4);
  const double s = 1.2;
  const auto mu = ps_measure(ball, s, ball.model.x);
  CHECK(mu.total_mass == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(mu.atoms.size() == mu.weights.size());
  CHECK(mu.s_parameter == s);

  // weights proportional to exp(-s d_F)
  const auto& e1 = ball.elements[mu.element_index[0]];
  const auto& e2 = ball.elements[mu.element_index.back()];
  CHECK(mu.weights[0] / mu.weights.back() ==
        doctest::Approx(std::exp(-s * (e1.d_F - e2.d_F))).epsilon(1e-10));

  // the cyclic ball at depth 2 has distances d and 2d; weight ratio e^{-s d}
  const auto cyc = enumerate_ball(cyclic_model(), 2);
  const auto nu = ps_measure(cyc, 0.8, cyc.model.x);
  double d_min = 1e300;
  for (const auto& e : cyc.elements)
    if (e.word_length == 1) d_min = std::min(d_min, e.d_F);
  double w1 = 0.0, w2 = 0.0;
  for (std::size_t i = 0; i < nu.atoms.size(); ++i) {
    const auto& e = cyc.elements[nu.element_index[i]];
    if (e.word_length == 1) w1 = nu.weights[i];
    if (e.word_length == 2) w2 = nu.weights[i];
  }
  CHECK(w2 / w1 == doctest::Approx(std::exp(-0.8 * d_min)).epsilon(1e-9));
}

TEST_CASE("ps measure equivariance at finite truncation") {
  const auto ball = enumerate_ball(schottky_model(), 4);
  const auto& model = ball.model;
  const SquareMatrix g(model.pres.generator(0));
  const BasePoint gx = apply(g, model.x);
  // d_F(g x0, (g gamma) x0) = d_F(x0, gamma x0): the unnormalized weight of
  // gamma at x0 equals the weight of g gamma at g x0
  int checked = 0;
  for (const auto& e : ball.elements) {
    if (e.word_length == 0 || e.word_length > 2) continue;
    const GroupPair shifted{g.entries() * e.matrix.m, e.matrix.minv * g.entries().inverse()};
    const double lhs = orbit_finsler_distance(gx, model.x, shifted, model.theta);
    CHECK(lhs == doctest::Approx(e.d_F).epsilon(1e-8));
    ++checked;
  }
  CHECK(checked > 10);
}

TEST_CASE("conformal ratio check") {
  const auto ball = enumerate_ball(schottky_model(), 5);
  const double s = 1.0, eps = 1.0;
  const auto mu0 = ps_measure(ball, s, ball.model.x);

  // same basepoint: every region ratio is exactly 1 and so is the prediction
  const auto rep_same = conformal_ratio_check(mu0, mu0, mu0.atoms[5], 0.5, eps,
                                              ball.model.theta);
  CHECK(rep_same.ratio == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rep_same.predicted == doctest::Approx(1.0).epsilon(1e-9));

  // moved basepoint, whole space: ratio equals the quotient of the two
  // normalized total masses by definition
  const Flag tau = mu0.atoms.back();  // a deep atom
  const BasePoint x_moved = flat_point_toward(ball.model.x, tau, ball.model.theta, 1.0);
  const auto mu1 = ps_measure(ball, s, x_moved);
  const auto rep_all = conformal_ratio_check(mu1, mu0, tau, 2.0, eps, ball.model.theta);
  CHECK(rep_all.mass_base == doctest::Approx(mu0.total_mass).epsilon(1e-12));
  CHECK(rep_all.ratio == doctest::Approx(mu1.total_mass / mu0.total_mass).epsilon(1e-10));

  // moving toward tau by Finsler length 1 gives horospherical displacement -1
  CHECK(busemann_cocycle(x_moved, ball.model.x, tau, ball.model.theta) ==
        doctest::Approx(-1.0).epsilon(1e-7));
  CHECK(rep_all.predicted == doctest::Approx(std::exp(s)).epsilon(1e-6));

  // a region that cannot hold mass
  CHECK_THROWS_AS(conformal_ratio_check(mu1, mu0, tau, 1e-300, eps, ball.model.theta),
                  std::domain_error);
  CHECK_THROWS_AS(conformal_ratio_check(mu1, ps_measure(ball, 2.0, ball.model.x), tau, 0.5,
                                        eps, ball.model.theta),
                  std::invalid_argument);
}

TEST_CASE("shadow lemma report") {
  const auto ball = enumerate_ball(schottky_model(), 6);
  const double s = 0.35;  // near the Finsler exponent of this preset
  const auto mu = ps_measure(ball, s, ball.model.x);
  const double r = 2.0 * tol::kShadowRadiusMin;

  const auto rep = shadow_lemma_report(mu, ball, r, s, 2);
  CHECK(rep.annulus_count > 0);
  CHECK(rep.min_ratio > 0.0);
  CHECK(std::isfinite(rep.max_ratio));
  CHECK(rep.empirical_c >= 1.0);
  CHECK(std::isfinite(rep.empirical_c));

  // each annulus element's own atom lies in its own shadow
  for (double m : rep.masses) CHECK(m > 0.0);

  // doubling r never decreases any shadow mass
  const auto rep2 = shadow_lemma_report(mu, ball, 2.0 * r, s, 2);
  REQUIRE(rep2.masses.size() == rep.masses.size());
  for (std::size_t i = 0; i < rep.masses.size(); ++i)
    CHECK(rep2.masses[i] >= rep.masses[i] - 1e-15);

  CHECK_THROWS_AS(shadow_lemma_report(mu, ball, 0.1 * tol::kShadowRadiusMin, s),
                  std::invalid_argument);
}

TEST_CASE("shadow lemma report on the product model") {
  const ProductOrbitModel diag{ProductPresentation(presets::diagonal_surface_pair())};
  const auto ball = enumerate_ball(diag, 4);
  const double s = 1.0;
  const auto mu = ps_measure(ball, s, ProductPoint::base());
  CHECK(mu.total_mass == doctest::Approx(1.0).epsilon(1e-12));

  const auto rep = shadow_lemma_report(mu, ball, 2.0 * tol::kShadowRadiusMin, s, 2);
  CHECK(rep.min_ratio > 0.0);
  CHECK(std::isfinite(rep.max_ratio));
  CHECK(rep.empirical_c >= 1.0);
}

TEST_CASE("matched premetric balls against the covering measure") {
  const auto ball = enumerate_ball(schottky_model(), 5);
  const double s = 0.4, eps = 1.0;
  const auto mu = ps_measure(ball, s, ball.model.x);
  const auto cloud = gromov_cloud(measure_flags(mu), ball.model.x, eps, 2);

  // a measure against itself: zero discrepancy
  const auto self_rep = matched_ball_report(mu.weights, mu.weights, cloud);
  CHECK(self_rep.max_relative_discrepancy == 0.0);
  CHECK(self_rep.regions_compared > 0);
  CHECK_FALSE(self_rep.support_mismatch);

  // against the covering measure: finite discrepancy, same support
  const double scale = 0.3 * cloud.diameter();
  const auto rep = ps_vs_hausdorff_comparison(mu, cloud, 0.35, scale);
  CHECK(rep.regions_compared > 0);
  CHECK(rep.max_relative_discrepancy >= 0.0);
  CHECK(rep.max_relative_discrepancy < 1.0);

  // disjoint supports: point masses at premetric-antipodal atoms; the region
  // around the first center separates them completely
  int far = 1;
  for (int j = 1; j < cloud.size(); ++j)
    if (cloud.at(0, j) > cloud.at(0, far)) far = j;
  std::vector<double> left(mu.weights.size(), 0.0), right(mu.weights.size(), 0.0);
  left[0] = 1.0;
  right[far] = 1.0;
  const auto mis = matched_ball_report(left, right, cloud);
  CHECK(mis.max_relative_discrepancy == doctest::Approx(1.0));
  CHECK(mis.support_mismatch);

  CHECK_THROWS_AS(ps_vs_hausdorff_comparison(mu, cloud, 0.35, 0.0), std::invalid_argument);
}
