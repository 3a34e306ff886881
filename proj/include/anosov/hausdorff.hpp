#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <stdexcept>
#include <vector>

#include "anosov/flag_boundary.hpp"
#include "anosov/orbit_engine.hpp"
#include "anosov/product_geometry.hpp"
#include "anosov/rng.hpp"
#include "anosov/tolerances.hpp"

// Covering measures and dimension estimation on finite point clouds carrying
// a premetric: a symmetric nonnegative pair function with zero diagonal, not
// assumed to satisfy the triangle inequality. The estimator is a covering
// count slope (box type); a critical-exponent bisection of the covering sum
// is exposed as a secondary diagnostic.

namespace anosov {

// A finite sample with a premetric evaluator. Pairwise values are computed on
// demand; the constructor makes one parallel pass over the lower triangle to
// validate finiteness/nonnegativity and cache the diameter, the resolution
// floor (median nearest-neighbor value, below which scales probe the sample
// rather than the set), and off-diagonal positivity. Symmetry is verified on
// all pairs for small clouds and on a deterministic subsample for large ones.
class PremetricCloud {
 public:
  PremetricCloud(int n, std::function<double(int, int)> premetric, int threads = 1)
      : n_(n), d_(std::move(premetric)) {
    if (n_ < 1) throw std::invalid_argument("PremetricCloud: need at least one point");
    for (int i = 0; i < n_; ++i)
      if (d_(i, i) != 0.0)
        throw std::invalid_argument("PremetricCloud: nonzero diagonal");
    scan(threads);
  }

  explicit PremetricCloud(const Matrix& dist, int threads = 1)
      : PremetricCloud(static_cast<int>(checked_square(dist).rows()),
                       [m = std::make_shared<Matrix>(dist)](int i, int j) { return (*m)(i, j); },
                       threads) {}

  int size() const { return n_; }
  double at(int i, int j) const { return d_(i, j); }
  double diameter() const { return diameter_; }
  double resolution_floor() const { return floor_; }
  bool positive() const { return positive_; }

  // the same sample under d^eps; cached statistics transform monotonically
  PremetricCloud powered(double eps) const {
    if (!(eps > 0.0)) throw std::invalid_argument("PremetricCloud::powered: eps must be positive");
    PremetricCloud out(*this);
    out.d_ = [base = d_, eps](int i, int j) { return std::pow(base(i, j), eps); };
    out.diameter_ = std::pow(diameter_, eps);
    out.floor_ = std::pow(floor_, eps);
    return out;
  }

 private:
  static const Matrix& checked_square(const Matrix& d) {
    if (d.rows() != d.cols())
      throw std::invalid_argument("PremetricCloud: distance matrix not square");
    return d;
  }

  void scan(int threads) {
    std::vector<double> row_max(n_, 0.0);
    std::vector<double> nn(n_, std::numeric_limits<double>::infinity());
    std::vector<char> row_ok(n_, 1), row_pos(n_, 1);
    detail::parallel_for(n_, threads, [&](std::size_t i) {
      for (int j = 0; j < n_; ++j) {
        if (j == static_cast<int>(i)) continue;
        const double v = d_(static_cast<int>(i), j);
        if (!std::isfinite(v) || v < 0.0) {
          row_ok[i] = 0;
          return;
        }
        row_max[i] = std::max(row_max[i], v);
        nn[i] = std::min(nn[i], v);
        if (v == 0.0) row_pos[i] = 0;
      }
    });
    for (int i = 0; i < n_; ++i) {
      if (!row_ok[i])
        throw std::invalid_argument("PremetricCloud: non-finite or negative premetric value");
      diameter_ = std::max(diameter_, row_max[i]);
      positive_ = positive_ && row_pos[i];
    }
    if (n_ >= 2) {
      std::sort(nn.begin(), nn.end());
      floor_ = 0.5 * (nn[(n_ - 1) / 2] + nn[n_ / 2]);
    }
    // symmetry: all pairs when affordable, else a deterministic subsample
    const auto check_pair = [&](int i, int j) {
      const double a = d_(i, j), b = d_(j, i);
      if (std::abs(a - b) > 1e-12 * (1.0 + std::abs(a)))
        throw std::invalid_argument("PremetricCloud: premetric not symmetric");
    };
    if (static_cast<std::int64_t>(n_) * n_ <= 4'000'000) {
      for (int i = 0; i < n_; ++i)
        for (int j = 0; j < i; ++j) check_pair(i, j);
    } else {
      Rng rng(0x5eedULL);
      for (int t = 0; t < 200'000; ++t) {
        const int i = static_cast<int>(rng.below(n_));
        const int j = static_cast<int>(rng.below(n_));
        if (i != j) check_pair(i, j);
      }
    }
  }

  int n_;
  std::function<double(int, int)> d_;
  double diameter_ = 0.0;
  double floor_ = 0.0;
  bool positive_ = true;
};

struct CoverRecord {
  double scale = 0.0;
  double beta = 0.0;
  int cover_size = 0;
  std::vector<int> centers;
  std::vector<int> assignment;      // point -> index into centers
  double sum_diam_beta = 0.0;       // sum over cells of diam^beta
  double max_cell_diameter = 0.0;   // the mesh actually achieved by the cells
};

// Farthest-point-first covering: centers are added at the point farthest from
// the current center set until every point is within scale of a center.
// Deterministic given the point order; the cover property is re-verified
// after construction.
inline CoverRecord greedy_cover(const PremetricCloud& cloud, double scale, double beta = 0.0) {
  if (!(scale > 0.0)) throw std::invalid_argument("greedy_cover: scale must be positive");
  const int n = cloud.size();
  CoverRecord rec;
  rec.scale = scale;
  rec.beta = beta;
  rec.centers.push_back(0);
  rec.assignment.assign(n, 0);
  std::vector<double> dist(n);
  for (int i = 0; i < n; ++i) dist[i] = cloud.at(i, 0);
  while (true) {
    int far = 0;
    for (int i = 1; i < n; ++i)
      if (dist[i] > dist[far]) far = i;
    if (dist[far] <= scale) break;
    const int c = static_cast<int>(rec.centers.size());
    rec.centers.push_back(far);
    for (int i = 0; i < n; ++i) {
      const double v = cloud.at(i, far);
      if (v < dist[i]) {
        dist[i] = v;
        rec.assignment[i] = c;
      }
    }
  }
  rec.cover_size = static_cast<int>(rec.centers.size());
  for (int i = 0; i < n; ++i)
    if (dist[i] > scale) throw std::logic_error("greedy_cover: cover property violated");
  // cell diameters
  std::vector<std::vector<int>> cells(rec.cover_size);
  for (int i = 0; i < n; ++i) cells[rec.assignment[i]].push_back(i);
  for (const auto& cell : cells) {
    if (cell.empty()) continue;
    double diam = 0.0;
    for (std::size_t a = 0; a < cell.size(); ++a)
      for (std::size_t b = 0; b < a; ++b)
        diam = std::max(diam, cloud.at(cell[a], cell[b]));
    rec.sum_diam_beta += beta == 0.0 ? 1.0 : std::pow(diam, beta);
    rec.max_cell_diameter = std::max(rec.max_cell_diameter, diam);
  }
  return rec;
}

// Upper bound for the scale-restricted covering sum: sum of (cell diameter)^beta
// over the greedy cover. Not claimed monotone in scale (greedy is not the
// infimum); exhaustive-optimal covers on small clouds bound it from below.
inline double hausdorff_measure_upper(const PremetricCloud& cloud, double beta, double scale) {
  if (beta < 0.0) throw std::invalid_argument("hausdorff_measure_upper: beta must be >= 0");
  if (cloud.size() >= 2 && scale <= cloud.resolution_floor())
    throw std::domain_error("hausdorff_measure_upper: scale at or below the resolution floor");
  return greedy_cover(cloud, scale, beta).sum_diam_beta;
}

// Exact minimum of sum diam^beta over all partitions of the given points into
// cells of diameter <= scale, by subset dynamic programming. Points are
// indices into the cloud; at most 12 of them.
inline double optimal_cover_value(const PremetricCloud& cloud, const std::vector<int>& points,
                                  double beta, double scale) {
  const int m = static_cast<int>(points.size());
  if (m == 0) return 0.0;
  if (m > 12) throw std::invalid_argument("optimal_cover_value: at most 12 points");
  const int full = (1 << m) - 1;
  std::vector<double> diam(full + 1, 0.0);
  for (int mask = 1; mask <= full; ++mask) {
    int h = 0;
    while ((mask >> (h + 1)) != 0) ++h;  // highest set bit
    const int prev = mask ^ (1 << h);
    double d = diam[prev];
    for (int j = 0; j < h; ++j)
      if (prev & (1 << j)) d = std::max(d, cloud.at(points[h], points[j]));
    diam[mask] = d;
  }
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> best(full + 1, inf);
  best[0] = 0.0;
  for (int mask = 1; mask <= full; ++mask) {
    const int low = mask & -mask;
    for (int sub = mask; sub != 0; sub = (sub - 1) & mask) {
      if (!(sub & low)) continue;
      if (diam[sub] > scale) continue;
      const double cost = beta == 0.0 ? 1.0 : std::pow(diam[sub], beta);
      best[mask] = std::min(best[mask], cost + best[mask ^ sub]);
    }
  }
  return best[full];
}

// Covering-count slope: least-squares fit of log cover_size against
// -log scale over geometrically spaced scales in [s_min, s_max].
inline ExponentEstimate dimension_estimate(const PremetricCloud& cloud, double s_min,
                                           double s_max, int n_scales = 16) {
  if (!(s_min < s_max) || !(s_max <= cloud.diameter() * (1.0 + 1e-12)))
    throw std::invalid_argument("dimension_estimate: need s_min < s_max <= diameter");
  if (n_scales < 8) throw std::invalid_argument("dimension_estimate: need at least 8 scales");
  if (cloud.size() >= 2 && s_min <= cloud.resolution_floor())
    throw std::domain_error("dimension_estimate: s_min at or below the resolution floor " +
                            std::to_string(cloud.resolution_floor()));
  Eigen::VectorXd xs(n_scales), ys(n_scales);
  ExponentEstimate est;
  for (int i = 0; i < n_scales; ++i) {
    const double s = s_min * std::pow(s_max / s_min, static_cast<double>(i) / (n_scales - 1));
    const auto rec = greedy_cover(cloud, s);
    xs[i] = -std::log(s);
    ys[i] = std::log(static_cast<double>(rec.cover_size));
    est.ratio_sequence.push_back(xs[i] != 0.0 ? ys[i] / xs[i] : 0.0);
  }
  const double mx = xs.mean(), my = ys.mean();
  const double vxx = (xs.array() - mx).square().sum();
  const double vxy = ((xs.array() - mx) * (ys.array() - my)).sum();
  const double vyy = (ys.array() - my).square().sum();
  est.value = vxx > 0.0 ? vxy / vxx : 0.0;
  est.window = {s_min, s_max};
  est.fit_quality = (vyy > 0.0 && vxx > 0.0) ? (vxy * vxy) / (vxx * vyy) : 1.0;
  est.sample_count = n_scales;
  est.validate();
  return est;
}

// Secondary diagnostic: the beta where the covering sum at the given scale
// crosses 1, located by bisection. Requires cell diameters below 1 so the sum
// is decreasing in beta, which holds for the scales used in practice.
inline double dimension_bisection(const PremetricCloud& cloud, double scale,
                                  double beta_hi = 8.0) {
  const auto value = [&](double beta) { return hausdorff_measure_upper(cloud, beta, scale); };
  if (value(0.0) <= 1.0) return 0.0;
  if (value(beta_hi) >= 1.0)
    throw std::domain_error("dimension_bisection: covering sum does not cross 1");
  double lo = 0.0, hi = beta_hi;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (value(mid) > 1.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

struct AxiomReport {
  bool empty_is_zero = false;
  int monotonicity_checks = 0, monotonicity_violations = 0;
  int subadditivity_checks = 0, subadditivity_violations = 0;
  int additivity_checks = 0, additivity_violations = 0;

  bool clean() const {
    return empty_is_zero && monotonicity_violations == 0 && subadditivity_violations == 0 &&
           additivity_violations == 0;
  }
};

// Outer-measure behavior of the optimal covering sum on random small subsets:
// the empty set maps to zero, subsets never exceed supersets, unions never
// exceed sums, and unions of sets separated by more than twice the scale
// split exactly (no cell of diameter <= scale can mix them).
inline AxiomReport outer_measure_axiom_suite(const PremetricCloud& cloud, double beta,
                                             double scale, int trials = 200,
                                             std::uint64_t seed = 0xA210Du) {
  const int n = cloud.size();
  AxiomReport rep;
  rep.empty_is_zero = optimal_cover_value(cloud, {}, beta, scale) == 0.0;
  Rng rng(seed);
  const auto draw = [&](int count) {
    std::vector<int> out;
    while (static_cast<int>(out.size()) < count) {
      const int p = static_cast<int>(rng.below(n));
      bool dup = false;
      for (int q : out) dup = dup || q == p;
      if (!dup) out.push_back(p);
    }
    return out;
  };
  for (int t = 0; t < trials; ++t) {
    const int nb = 2 + static_cast<int>(rng.below(std::min(n, 12) - 1));
    const std::vector<int> b = draw(nb);
    std::vector<int> a;
    for (int p : b)
      if (rng.uniform() < 0.5) a.push_back(p);
    if (a.empty()) a.push_back(b[0]);
    const double va = optimal_cover_value(cloud, a, beta, scale);
    const double vb = optimal_cover_value(cloud, b, beta, scale);
    ++rep.monotonicity_checks;
    if (va > vb + 1e-12) ++rep.monotonicity_violations;

    const int nc = 1 + static_cast<int>(rng.below(std::min(n, 12) - nb > 0
                                                      ? std::min(n, 12) - nb
                                                      : 1));
    std::vector<int> c = draw(nc), united = b;
    for (int p : c) {
      bool dup = false;
      for (int q : united) dup = dup || q == p;
      if (!dup) united.push_back(p);
    }
    if (static_cast<int>(united.size()) <= 12) {
      const double vc = optimal_cover_value(cloud, c, beta, scale);
      const double vu = optimal_cover_value(cloud, united, beta, scale);
      ++rep.subadditivity_checks;
      if (vu > vb + vc + 1e-12) ++rep.subadditivity_violations;
    }

    // additivity needs every cross pair separated by > 2 scale, so the second
    // set is drawn from the points far from the first (when any exist)
    if (static_cast<int>(b.size()) < 12) {
      std::vector<int> far;
      for (int p = 0; p < n; ++p) {
        double gap = std::numeric_limits<double>::infinity();
        for (int q : b) gap = std::min(gap, cloud.at(p, q));
        if (gap > 2.0 * scale) far.push_back(p);
      }
      std::vector<int> sep;
      const int want = std::min<int>(12 - static_cast<int>(b.size()),
                                     static_cast<int>(far.size()));
      while (static_cast<int>(sep.size()) < want) {
        const int p = far[rng.below(far.size())];
        bool dup = false;
        for (int q : sep) dup = dup || q == p;
        if (!dup) sep.push_back(p);
      }
      if (!sep.empty()) {
        std::vector<int> both = b;
        both.insert(both.end(), sep.begin(), sep.end());
        const double vs = optimal_cover_value(cloud, sep, beta, scale);
        const double vboth = optimal_cover_value(cloud, both, beta, scale);
        ++rep.additivity_checks;
        if (std::abs(vboth - vb - vs) > 1e-12 * (1.0 + vboth)) ++rep.additivity_violations;
      }
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// cloud builders for flag samples

// exp(-eps <f_i|f_j>_x) as a premetric on a flag sample. Frames are computed
// once; each pair evaluation reduces to two dot products, with the closed
// form exp(-eps gp) = (sin sin)^{eps sqrt(k+1)/2}.
inline PremetricCloud gromov_cloud(const std::vector<Flag>& flags, const BasePoint& x,
                                   double eps, int threads = 1) {
  if (flags.empty()) throw std::invalid_argument("gromov_cloud: empty flag sample");
  if (!(eps > 0.0)) throw std::invalid_argument("gromov_cloud: eps must be positive");
  auto frames = std::make_shared<std::vector<FlagFrame>>();
  frames->reserve(flags.size());
  for (const auto& f : flags) frames->push_back(flag_in_frame(f, x));
  const double expo = 0.5 * eps * std::sqrt(static_cast<double>(flags[0].dim()));
  return PremetricCloud(
      static_cast<int>(flags.size()),
      [frames, expo](int i, int j) {
        if (i == j) return 0.0;
        const auto& a = (*frames)[i];
        const auto& b = (*frames)[j];
        const double s = std::abs(a.line.dot(b.normal)) * std::abs(b.line.dot(a.normal));
        return std::pow(s, expo);
      },
      threads);
}

inline PremetricCloud gromov_cloud(const std::vector<ProductFlag>& flags, const ProductPoint& x,
                                   double eps, int threads = 1) {
  if (flags.empty()) throw std::invalid_argument("gromov_cloud: empty flag sample");
  auto data = std::make_shared<std::vector<ProductFlag>>(flags);
  return PremetricCloud(
      static_cast<int>(flags.size()),
      [data, x, eps](int i, int j) {
        if (i == j) return 0.0;
        return product_gromov_premetric((*data)[i], (*data)[j], x, eps);
      },
      threads);
}

// Chordal (sine of angle) metric on the line components of a flag sample, for
// dimension estimates of the projectivized limit set under a genuine metric.
inline PremetricCloud line_chordal_cloud(const std::vector<Flag>& flags, int threads = 1) {
  if (flags.empty()) throw std::invalid_argument("line_chordal_cloud: empty flag sample");
  auto lines = std::make_shared<std::vector<Vector>>();
  lines->reserve(flags.size());
  for (const auto& f : flags) lines->push_back(f.line());
  return PremetricCloud(
      static_cast<int>(flags.size()),
      [lines](int i, int j) {
        if (i == j) return 0.0;
        const double c = std::min(1.0, std::abs((*lines)[i].dot((*lines)[j])));
        return std::sqrt(std::max(0.0, 1.0 - c * c));
      },
      threads);
}

}  // namespace anosov
