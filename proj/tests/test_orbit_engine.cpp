#include "doctest.h"

#include <cmath>

#include "anosov/orbit_engine.hpp"
#include "anosov/presets.hpp"
#include "anosov/rng.hpp"

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

std::size_t free_ball_size(int gens, int depth) {
  std::size_t n = 1, layer = 2 * gens;
  for (int d = 1; d <= depth; ++d) {
    n += layer;
    layer *= 2 * gens - 1;
  }
  return n;
}

}  // namespace

TEST_CASE("trivial group ball") {
  const SlOrbitModel model{SlPresentation({}, 3), BasePoint::identity(3),
                           TypeVector::line_hyperplane(3)};
  const auto ball = enumerate_ball(model, 5);
  CHECK(ball.elements.size() == 1);
  CHECK(ball.elements[0].word_length == 0);
  CHECK(std::isinf(completeness_radius(ball, MetricTag::F)));
  CHECK(counting_function(ball, 100.0, MetricTag::F) == 1);
}

TEST_CASE("cyclic group ball has 2L+1 elements") {
  for (int depth : {1, 4, 9}) {
    const auto ball = enumerate_ball(cyclic_model(), depth);
    CHECK(ball.elements.size() == static_cast<std::size_t>(2 * depth + 1));
    CHECK_FALSE(ball.truncated_by_overflow);
  }
}

TEST_CASE("schottky ball matches free-group growth with no merges") {
  const auto ball = enumerate_ball(schottky_model(), 6);
  CHECK(ball.elements.size() == free_ball_size(2, 6));
  CHECK(ball.dedup_count == 0);
  // sorted by d_F; d_F <= d_R throughout; words freely reduced
  for (std::size_t i = 0; i < ball.elements.size(); ++i) {
    const auto& e = ball.elements[i];
    if (i > 0) CHECK(ball.elements[i - 1].d_F <= e.d_F);
    CHECK(e.d_F <= e.d_R + tol::kGeom);
    for (std::size_t j = 1; j < e.word.size(); ++j)
      CHECK(e.word[j] != -e.word[j - 1]);
  }
}

TEST_CASE("counting function and completeness radius") {
  const auto ball = enumerate_ball(schottky_model(), 5);
  CHECK(counting_function(ball, 0.0, MetricTag::F) == 0);
  CHECK(counting_function(ball, 1e-9, MetricTag::F) == 1);

  const double rc = completeness_radius(ball, MetricTag::F);
  // frontier minimum: every element closer than rc has word length < 5
  for (const auto& e : ball.elements)
    if (e.d_F < rc - 1e-12) CHECK(e.word_length <= 5);
  CHECK_THROWS_AS(counting_function(ball, rc * 1.01, MetricTag::F), std::domain_error);

  // brute-force recount at three radii, both metrics
  for (double frac : {0.3, 0.6, 0.95})
    for (MetricTag tag : {MetricTag::F, MetricTag::R}) {
      const double r = frac * completeness_radius(ball, tag);
      std::size_t direct = 0;
      for (const auto& e : ball.elements)
        if ((tag == MetricTag::F ? e.d_F : e.d_R) < r) ++direct;
      CHECK(counting_function(ball, r, tag) == direct);
    }

  // depth-1 completeness equals the nearest generator
  const auto b1 = enumerate_ball(schottky_model(), 1);
  double gen_min = 1e300;
  for (const auto& e : b1.elements)
    if (e.word_length == 1) gen_min = std::min(gen_min, e.d_F);
  CHECK(completeness_radius(b1, MetricTag::F) == doctest::Approx(gen_min));

  // monotone in depth
  const auto b3 = enumerate_ball(schottky_model(), 3);
  CHECK(completeness_radius(b3, MetricTag::F) >= completeness_radius(b1, MetricTag::F) - 1e-12);
  CHECK(completeness_radius(ball, MetricTag::F) >= completeness_radius(b3, MetricTag::F) - 1e-12);
}

TEST_CASE("critical exponent: cyclic near zero, schottky consistent") {
  const auto cyc = enumerate_ball(cyclic_model(), 40);
  const auto est = critical_exponent(cyc, MetricTag::F);
  CHECK(est.value >= 0.0);
  CHECK(est.value < 0.05);

  const auto ball = enumerate_ball(schottky_model(), 8);
  const auto df = critical_exponent(ball, MetricTag::F);
  const auto dr = critical_exponent(ball, MetricTag::R);
  CHECK(df.value > 0.05);
  CHECK(dr.value <= df.value + 0.02);
  CHECK(df.fit_quality > 0.9);
  CHECK(df.sample_count == 32);
  CHECK(static_cast<int>(df.ratio_sequence.size()) == 32);

  // linear metric comparison fit is feasible
  const auto [big_l, a] = metric_comparison_fit(ball);
  CHECK(big_l >= 1.0);
  CHECK(a >= 0.0);
  for (const auto& e : ball.elements)
    CHECK(e.d_R / big_l - a <= e.d_F + tol::kGeom);
}

TEST_CASE("root exponents on the symmetric square") {
  const auto ball = enumerate_ball(schottky_model(), 8);
  // sigma_2 = 0 per element for symmetric squares
  for (const auto& e : ball.elements)
    if (e.word_length > 0) CHECK(std::abs(e.sigma[1]) < 1e-9);

  const auto roots = root_exponents(ball);
  const auto df = critical_exponent(ball, MetricTag::F);
  CHECK(std::abs(df.value * std::sqrt(3.0) - roots.delta_1_kplus1.value) <= 1e-9);
  CHECK(roots.delta_1_kplus1.value / roots.delta_1_2.value ==
        doctest::Approx(0.5).epsilon(0.05));
  CHECK(roots.delta_1_kplus1.value <= roots.delta_1_2.value / 2.0 + 0.02);
}

TEST_CASE("surface group dedup against the free count") {
  const ProductOrbitModel diag{ProductPresentation(presets::diagonal_surface_pair())};
  const ProductOrbitModel bent{ProductPresentation(presets::bent_surface_pair())};

  // the defining relation closes in both structures
  for (const auto* m : {&diag, &bent}) {
    auto g = m->identity();
    for (int letter : presets::surface_relator()) g = m->step(g, letter);
    const double dist = std::min((g.first - Eigen::Matrix2d::Identity()).norm(),
                                 (g.first + Eigen::Matrix2d::Identity()).norm()) +
                        std::min((g.second - Eigen::Matrix2d::Identity()).norm(),
                                 (g.second + Eigen::Matrix2d::Identity()).norm());
    CHECK(dist < 1e-9);
  }

  const auto ball_diag = enumerate_ball(diag, 4);
  const auto ball_bent = enumerate_ball(bent, 4);
  // length <= 3: no relation shorter than the 8-letter relator can act
  std::size_t len3 = 0;
  for (const auto& e : ball_diag.elements)
    if (e.word_length <= 3) ++len3;
  CHECK(len3 == free_ball_size(4, 3));
  // length 4: first collapses appear, identically in both structures
  CHECK(ball_diag.elements.size() < free_ball_size(4, 4));
  CHECK(ball_diag.elements.size() == ball_bent.elements.size());
  CHECK(ball_diag.dedup_count == ball_bent.dedup_count);
  CHECK(ball_diag.dedup_count > 0);
}

TEST_CASE("parallel enumeration is identical to serial") {
  EnumerationOptions serial, parallel;
  parallel.threads = 4;
  const auto a = enumerate_ball(schottky_model(), 6, serial);
  const auto b = enumerate_ball(schottky_model(), 6, parallel);
  REQUIRE(a.elements.size() == b.elements.size());
  for (std::size_t i = 0; i < a.elements.size(); ++i) {
    CHECK(a.elements[i].word == b.elements[i].word);
    CHECK(a.elements[i].d_F == b.elements[i].d_F);  // bitwise
    CHECK(a.elements[i].d_R == b.elements[i].d_R);
    CHECK((a.elements[i].matrix.m - b.elements[i].matrix.m).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.elements[i].matrix.minv - b.elements[i].matrix.minv).cwiseAbs().maxCoeff() == 0.0);
  }

  const ProductOrbitModel diag{ProductPresentation(presets::diagonal_surface_pair())};
  const auto c = enumerate_ball(diag, 4, serial);
  const auto d = enumerate_ball(diag, 4, parallel);
  REQUIRE(c.elements.size() == d.elements.size());
  for (std::size_t i = 0; i < c.elements.size(); ++i) {
    CHECK(c.elements[i].word == d.elements[i].word);
    CHECK(c.elements[i].d_F == d.elements[i].d_F);
  }
}

TEST_CASE("radius-capped enumeration matches the full ball inside the cap") {
  const auto full = enumerate_ball(schottky_model(), 6);
  EnumerationOptions opts;
  const double cap = 0.6 * completeness_radius(full, MetricTag::F);
  opts.radius_cap = cap;
  const auto pruned = enumerate_ball(schottky_model(), 6, opts);
  CHECK(completeness_radius(pruned, MetricTag::F) <= cap + 1e-12);

  std::vector<const OrbitElement<SlOrbitModel>*> in_full, in_pruned;
  for (const auto& e : full.elements)
    if (e.d_F <= cap) in_full.push_back(&e);
  for (const auto& e : pruned.elements)
    if (e.d_F <= cap) in_pruned.push_back(&e);
  REQUIRE(in_full.size() == in_pruned.size());
  for (std::size_t i = 0; i < in_full.size(); ++i)
    CHECK(in_full[i]->word == in_pruned[i]->word);
}

TEST_CASE("memory budget produces a partial-ball error") {
  EnumerationOptions opts;
  opts.max_elements = 50;
  CHECK_THROWS_AS(enumerate_ball(schottky_model(), 6, opts), std::runtime_error);
}

TEST_CASE("conical exponent estimate") {
  const auto cyc = enumerate_ball(cyclic_model(), 40);
  Vector l = Vector::Zero(3), n = Vector::Zero(3);
  l[0] = 1;
  n[2] = 1;
  const Flag tau(l, n);  // attracting flag of the diagonal generator
  const auto est = conical_exponent_estimate(cyc, tau, 2.0, 2);
  CHECK(std::abs(est.value) < 0.05);

  // flag far from every orbit direction: too few conical points
  Vector l2 = Vector::Zero(3), n2 = Vector::Zero(3);
  l2[1] = 1;
  n2[0] = 1;
  const Flag away(l2, n2);
  CHECK_THROWS_AS(conical_exponent_estimate(cyc, away, 0.3, 2), std::domain_error);
  CHECK_THROWS_AS(conical_exponent_estimate(cyc, tau, -1.0, 1), std::invalid_argument);
}

TEST_CASE("symmetric square lift") {
  CHECK((symmetric_square_lift(Eigen::Matrix2d::Identity()) - Matrix::Identity(3, 3))
            .cwiseAbs()
            .maxCoeff() < 1e-15);

  Eigen::Matrix2d d;
  d << std::exp(1.0), 0, 0, std::exp(-1.0);
  const Matrix lift = symmetric_square_lift(d);
  CHECK(lift(0, 0) == doctest::Approx(std::exp(2.0)).epsilon(1e-12));
  CHECK(lift(1, 1) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(lift(2, 2) == doctest::Approx(std::exp(-2.0)).epsilon(1e-12));
  CHECK(std::abs(lift.determinant() - 1.0) < 1e-12);

  Rng rng(97);
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::Matrix2d g, h;
    g << rng.normal(), rng.normal(), rng.normal(), rng.normal();
    h << rng.normal(), rng.normal(), rng.normal(), rng.normal();
    if (g.determinant() < 0) g.row(0) *= -1;
    if (h.determinant() < 0) h.row(0) *= -1;
    g /= std::sqrt(g.determinant());
    h /= std::sqrt(h.determinant());
    const Matrix lhs = symmetric_square_lift(g * h);
    const Matrix rhs = symmetric_square_lift(g) * symmetric_square_lift(h);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-10);
  }

  Eigen::Matrix2d bad = 2.0 * Eigen::Matrix2d::Identity();
  CHECK_THROWS_AS(symmetric_square_lift(bad), std::invalid_argument);
}

TEST_CASE("non-regular elements keep an empty flag") {
  // lift of a rotation: all singular values 1, no gap
  const Matrix lift = symmetric_square_lift(presets::rotation(1.0));
  const SlOrbitModel model{SlPresentation({lift}), BasePoint::identity(3),
                           TypeVector::line_hyperplane(3)};
  const auto a = model.annotate(GroupPair::from(SquareMatrix(lift)));
  CHECK_FALSE(a.flag.has_value());
  CHECK(a.d_F == doctest::Approx(0.0).epsilon(1e-9));
}
