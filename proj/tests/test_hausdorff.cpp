#include "doctest.h"

#include <cmath>
#include <vector>

#include "anosov/hausdorff.hpp"
#include "anosov/rng.hpp"

using namespace anosov;

namespace {

PremetricCloud line_cloud(const std::vector<double>& xs, int threads = 1) {
  auto pts = std::make_shared<std::vector<double>>(xs);
  return PremetricCloud(
      static_cast<int>(xs.size()),
      [pts](int i, int j) { return std::abs((*pts)[i] - (*pts)[j]); }, threads);
}

std::vector<double> cantor_midpoints(int depth) {
  std::vector<double> xs{0.5};
  for (int d = 0; d < depth; ++d) {
    std::vector<double> next;
    for (double x : xs) {
      next.push_back(x / 3.0);
      next.push_back(x / 3.0 + 2.0 / 3.0);
    }
    xs = std::move(next);
  }
  return xs;
}

}  // namespace

TEST_CASE("cloud validation") {
  Matrix bad(2, 3);
  bad.setZero();
  CHECK_THROWS_AS(PremetricCloud{bad}, std::invalid_argument);

  Matrix asym(2, 2);
  asym << 0, 1, 2, 0;
  CHECK_THROWS_AS(PremetricCloud{asym}, std::invalid_argument);

  Matrix neg(2, 2);
  neg << 0, -1, -1, 0;
  CHECK_THROWS_AS(PremetricCloud{neg}, std::invalid_argument);

  Matrix diag(2, 2);
  diag << 0.5, 1, 1, 0;
  CHECK_THROWS_AS(PremetricCloud{diag}, std::invalid_argument);

  const auto cloud = line_cloud({0.0, 1.0, 3.0});
  CHECK(cloud.size() == 3);
  CHECK(cloud.diameter() == doctest::Approx(3.0));
  CHECK(cloud.resolution_floor() == doctest::Approx(1.0));  // nearest neighbors 1, 1, 2
  CHECK(cloud.positive());

  const auto repeated = line_cloud({0.0, 0.0, 1.0});
  CHECK_FALSE(repeated.positive());

  const auto single = line_cloud({0.7});
  CHECK(single.resolution_floor() == 0.0);
  CHECK(single.diameter() == 0.0);
}

TEST_CASE("greedy cover basics") {
  Rng rng(11);
  std::vector<double> xs;
  for (int i = 0; i < 1000; ++i) xs.push_back(rng.uniform());
  const auto cloud = line_cloud(xs);

  const auto whole = greedy_cover(cloud, cloud.diameter());
  CHECK(whole.cover_size == 1);

  const auto fine = greedy_cover(cloud, 1e-9);
  CHECK(fine.cover_size == cloud.size());

  // interval covering arithmetic: the minimal radius-0.01 cover needs
  // ceil(1/0.02) = 50 centers; farthest-point centers are pairwise more than
  // 0.01 apart, so at most 100 fit in the unit interval
  const auto rec = greedy_cover(cloud, 0.01);
  CHECK(rec.cover_size >= 50);
  CHECK(rec.cover_size <= 100);

  // cover property and assignment consistency
  for (int i = 0; i < cloud.size(); ++i) {
    CHECK(cloud.at(i, rec.centers[rec.assignment[i]]) <= 0.01 + 1e-15);
  }
  CHECK(rec.max_cell_diameter <= 2.0 * 0.01 + 1e-15);

  CHECK_THROWS_AS(greedy_cover(cloud, 0.0), std::invalid_argument);
}

TEST_CASE("covering sum and the exhaustive optimum") {
  const auto single = line_cloud({2.0});
  CHECK(hausdorff_measure_upper(single, 1.5, 0.1) == 0.0);

  Rng rng(23);
  std::vector<double> xs;
  for (int i = 0; i < 10; ++i) xs.push_back(rng.uniform());
  const auto cloud = line_cloud(xs);

  for (double scale : {0.05, 0.15, 0.4}) {
    if (scale <= cloud.resolution_floor()) continue;
    const auto rec = greedy_cover(cloud, scale, 0.0);
    CHECK(hausdorff_measure_upper(cloud, 0.0, scale) == doctest::Approx(rec.cover_size));
    // the greedy partition is feasible at its own mesh, so it upper-bounds
    // the exhaustive optimum there; greedy should not be badly suboptimal
    std::vector<int> all;
    for (int i = 0; i < cloud.size(); ++i) all.push_back(i);
    const double mesh = std::max(rec.max_cell_diameter, scale);
    const double opt = optimal_cover_value(cloud, all, 0.0, mesh);
    CHECK(rec.sum_diam_beta >= opt - 1e-12);
    CHECK(rec.sum_diam_beta <= 4.0 * opt);
  }

  // beta > 0: all-singleton partitions show the optimum for finite sets is 0
  std::vector<int> all;
  for (int i = 0; i < cloud.size(); ++i) all.push_back(i);
  CHECK(optimal_cover_value(cloud, all, 0.7, 0.2) == 0.0);

  // hand case: three points 0, 1, 2 with mesh 1 need two cells
  const auto three = line_cloud({0.0, 1.0, 2.0});
  CHECK(optimal_cover_value(three, {0, 1, 2}, 0.0, 1.0) == doctest::Approx(2.0));
  CHECK(optimal_cover_value(three, {0, 1, 2}, 0.0, 0.5) == doctest::Approx(3.0));
  CHECK(optimal_cover_value(three, {0, 1, 2}, 0.0, 2.0) == doctest::Approx(1.0));
  CHECK(optimal_cover_value(three, {}, 0.0, 1.0) == 0.0);

  CHECK_THROWS_AS(optimal_cover_value(cloud, std::vector<int>(13, 0), 0.0, 1.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(hausdorff_measure_upper(cloud, -1.0, 0.1), std::invalid_argument);
}

TEST_CASE("dimension estimate: finite set reads zero on the valid range") {
  // four tight pairs, pair gap far below the cluster spacing
  std::vector<double> xs;
  for (int c = 0; c < 4; ++c) {
    xs.push_back(static_cast<double>(c));
    xs.push_back(static_cast<double>(c) + 1e-4);
  }
  const auto cloud = line_cloud(xs);
  const auto est = dimension_estimate(cloud, 0.001, 0.2, 8);
  CHECK(std::abs(est.value) < 1e-9);
  CHECK(est.sample_count == 8);

  CHECK_THROWS_AS(dimension_estimate(cloud, 1e-6, 0.2, 8), std::domain_error);
  CHECK_THROWS_AS(dimension_estimate(cloud, 0.2, 0.001, 8), std::invalid_argument);
  CHECK_THROWS_AS(dimension_estimate(cloud, 0.001, 0.2, 4), std::invalid_argument);
}

TEST_CASE("dimension estimate: circle reads one") {
  Rng rng(5);
  auto pts = std::make_shared<std::vector<std::pair<double, double>>>();
  for (int i = 0; i < 20000; ++i) {
    const double a = 2.0 * 3.14159265358979323846 * rng.uniform();
    pts->push_back({std::cos(a), std::sin(a)});
  }
  const PremetricCloud cloud(
      static_cast<int>(pts->size()),
      [pts](int i, int j) {
        const double dx = (*pts)[i].first - (*pts)[j].first;
        const double dy = (*pts)[i].second - (*pts)[j].second;
        return std::sqrt(dx * dx + dy * dy);
      },
      4);
  const auto est = dimension_estimate(cloud, 0.02, 0.5, 12);
  CHECK(est.value == doctest::Approx(1.0).epsilon(0.05));
  CHECK(est.fit_quality > 0.95);
}

TEST_CASE("dimension estimate: middle-thirds set and the power scaling law") {
  const auto cloud = line_cloud(cantor_midpoints(10));
  const double s_lo = std::pow(3.0, -6.0), s_hi = std::pow(3.0, -1.0);
  const auto est = dimension_estimate(cloud, s_lo, s_hi, 16);
  const double expected = std::log(2.0) / std::log(3.0);
  CHECK(est.value == doctest::Approx(expected).epsilon(0.05));

  // replacing d by d^(1/2) doubles the estimate
  const auto half = cloud.powered(0.5);
  const auto est2 = dimension_estimate(half, std::sqrt(s_lo), std::sqrt(s_hi), 16);
  CHECK(est2.value == doctest::Approx(2.0 * est.value).epsilon(0.05));

  // bisection diagnostic lands near the slope estimate
  const double bis = dimension_bisection(cloud, s_lo);
  CHECK(bis == doctest::Approx(expected).epsilon(0.25));
}

TEST_CASE("dimension estimate is stable under relabeling") {
  Rng rng(7);
  std::vector<double> xs;
  for (int i = 0; i < 800; ++i) xs.push_back(rng.uniform());
  const auto est = dimension_estimate(line_cloud(xs), 0.01, 0.3, 12);
  std::vector<double> rev(xs.rbegin(), xs.rend());
  const auto est_rev = dimension_estimate(line_cloud(rev), 0.01, 0.3, 12);
  CHECK(std::abs(est.value - est_rev.value) < 0.03);
}

TEST_CASE("outer measure axiom suite") {
  // two clusters separated far beyond twice any tested scale
  Rng rng(31);
  std::vector<double> xs;
  for (int i = 0; i < 30; ++i) xs.push_back(rng.uniform());
  for (int i = 0; i < 30; ++i) xs.push_back(10.0 + rng.uniform());
  const auto cloud = line_cloud(xs);

  for (double beta : {0.0, 0.6}) {
    const auto rep = outer_measure_axiom_suite(cloud, beta, 0.3);
    CHECK(rep.clean());
    CHECK(rep.monotonicity_checks == 200);
    CHECK(rep.subadditivity_checks > 100);
    CHECK(rep.additivity_checks > 10);
  }
}

TEST_CASE("uniform interval bisection diagnostic") {
  Rng rng(41);
  std::vector<double> xs;
  for (int i = 0; i < 1000; ++i) xs.push_back(rng.uniform());
  const auto cloud = line_cloud(xs);
  const double bis = dimension_bisection(cloud, 0.01);
  CHECK(bis == doctest::Approx(1.0).epsilon(0.2));
}

TEST_CASE("flag sample clouds") {
  // flags of a 3-dimensional toy sample: lines e1, e2, (e1+e2)/sqrt2 with
  // matching normals, all pairwise antipodal
  Vector e1 = Vector::Zero(3), e2 = Vector::Zero(3), e3 = Vector::Zero(3);
  e1[0] = 1;
  e2[1] = 1;
  e3[2] = 1;
  Vector m = (e1 + e2).normalized();
  const std::vector<Flag> flags{Flag(e1, e3), Flag(e2, e3 + 0.5 * e1), Flag(m, e3 + 0.3 * (e1 - e2))};
  const BasePoint x = BasePoint::identity(3);
  const double eps = 0.7;
  const auto cloud = gromov_cloud(flags, x, eps);
  CHECK(cloud.size() == 3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < i; ++j)
      CHECK(cloud.at(i, j) ==
            doctest::Approx(gromov_premetric(flags[i], flags[j], x, eps)).epsilon(1e-10));

  const auto lines = line_chordal_cloud(flags);
  CHECK(lines.at(0, 1) == doctest::Approx(1.0));                      // orthogonal lines
  CHECK(lines.at(0, 2) == doctest::Approx(std::sqrt(0.5)));           // 45 degrees
  CHECK(lines.at(2, 1) == doctest::Approx(std::sqrt(0.5)));

  const std::vector<ProductFlag> pf{{BoundaryPoint::finite(0.0), BoundaryPoint::finite(0.0)},
                                    {BoundaryPoint::finite(1.0), BoundaryPoint::finite(2.0)},
                                    {BoundaryPoint::infinity(), BoundaryPoint::finite(-1.0)}};
  const auto pcloud = gromov_cloud(pf, ProductPoint::base(), eps);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < i; ++j)
      CHECK(pcloud.at(i, j) ==
            doctest::Approx(product_gromov_premetric(pf[i], pf[j], ProductPoint::base(), eps))
                .epsilon(1e-10));
}
