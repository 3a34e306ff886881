#pragma once

#include <algorithm>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <unordered_map>
#include <utility>
#include <vector>

#include "anosov/flag_boundary.hpp"
#include "anosov/product_geometry.hpp"
#include "anosov/sl_geometry.hpp"

// Word-ball enumeration of finitely generated matrix groups with geometric
// annotation, counting functions, and the critical-exponent estimators.
// The BFS structure and dedup run serially (cheap); the per-element geometric
// annotation is embarrassingly parallel and is written into preassigned slots,
// so parallel and serial runs produce identical balls.

namespace anosov {

enum class MetricTag { F, R };

using Word = std::vector<std::int8_t>;

namespace detail {

template <class F>
void parallel_for(std::size_t n, int threads, F&& body) {
  if (threads <= 1 || n < 64) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  const int workers = std::min<std::size_t>(threads, n);
  std::vector<std::thread> pool;
  std::exception_ptr first_error;
  std::mutex error_mutex;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      const std::size_t lo = n * w / workers;
      const std::size_t hi = n * (w + 1) / workers;
      try {
        for (std::size_t i = lo; i < hi; ++i) body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

// shortlex on words with letter order +1 < -1 < +2 < -2 < ...
inline int letter_rank(int letter) {
  return 2 * (std::abs(letter) - 1) + (letter < 0 ? 1 : 0);
}

inline bool word_less(const Word& a, const Word& b) {
  if (a.size() != b.size()) return a.size() < b.size();
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) return letter_rank(a[i]) < letter_rank(b[i]);
  return false;
}

}  // namespace detail

// Windowed least-squares slope estimate of an exponential growth rate.
struct ExponentEstimate {
  double value = 0.0;
  std::pair<double, double> window{0.0, 0.0};
  double fit_quality = 0.0;  // coefficient of determination
  int sample_count = 0;
  std::vector<double> ratio_sequence;  // log N(r)/r at the sampled radii

  void validate() const {
    if (!(window.first < window.second))
      throw std::invalid_argument("ExponentEstimate: empty window");
    if (sample_count < 8)
      throw std::invalid_argument("ExponentEstimate: need at least 8 samples");
  }
};

// Slope of log N(r) over r in [window_fraction * R, R], sampled at n_samples
// radii; dists must be the sorted distance multiset including the identity.
inline ExponentEstimate fit_exponent(const std::vector<double>& sorted_dists,
                                     double completeness, double window_fraction = 0.5,
                                     int n_samples = 32) {
  if (sorted_dists.empty()) throw std::invalid_argument("fit_exponent: empty orbit");
  const double r_max = completeness;
  const double r_min = window_fraction * completeness;
  if (!(r_min < r_max) || !(r_min > 0.0))
    throw std::domain_error("fit_exponent: window too small (completeness radius " +
                            std::to_string(completeness) + ")");
  Eigen::VectorXd xs(n_samples), ys(n_samples);
  ExponentEstimate est;
  for (int i = 0; i < n_samples; ++i) {
    const double r = r_min + (r_max - r_min) * i / (n_samples - 1);
    const auto it = std::lower_bound(sorted_dists.begin(), sorted_dists.end(), r);
    const auto count = static_cast<double>(it - sorted_dists.begin());
    if (count < 1.0) throw std::domain_error("fit_exponent: empty count inside window");
    xs[i] = r;
    ys[i] = std::log(count);
    est.ratio_sequence.push_back(ys[i] / r);
  }
  const double mx = xs.mean(), my = ys.mean();
  const double vxx = (xs.array() - mx).square().sum();
  const double vxy = ((xs.array() - mx) * (ys.array() - my)).sum();
  const double vyy = (ys.array() - my).square().sum();
  est.value = vxy / vxx;
  est.window = {r_min, r_max};
  est.fit_quality = vyy > 0.0 ? (vxy * vxy) / (vxx * vyy) : 1.0;
  est.sample_count = n_samples;
  est.validate();
  return est;
}

// ---------------------------------------------------------------------------
// presentations

class SlPresentation {
 public:
  // dim_hint is only needed for the trivial (empty) presentation
  explicit SlPresentation(const std::vector<Matrix>& generators, int dim_hint = 0)
      : dim_hint_(dim_hint) {
    if (generators.empty() && dim_hint < 2)
      throw std::invalid_argument("SlPresentation: empty presentation needs a dimension");
    for (const auto& g : generators) {
      const SquareMatrix sm(g);  // validates and renormalizes det
      const Matrix& m = sm.entries();
      if ((m - Matrix::Identity(m.rows(), m.cols())).cwiseAbs().maxCoeff() < 1e-9)
        throw std::invalid_argument("SlPresentation: generator equal to identity");
      const Matrix inv = m.inverse();
      if ((m * inv - Matrix::Identity(m.rows(), m.cols())).cwiseAbs().maxCoeff() > 1e-9)
        throw std::invalid_argument("SlPresentation: inverse verification failed");
      if (!gens_.empty() && gens_.front().rows() != m.rows())
        throw std::invalid_argument("SlPresentation: mixed generator dimensions");
      gens_.push_back(m);
      invs_.push_back(inv);
    }
  }

  int count() const { return static_cast<int>(gens_.size()); }
  int dim() const { return gens_.empty() ? dim_hint_ : static_cast<int>(gens_.front().rows()); }
  const Matrix& generator(int i) const { return gens_[i]; }
  const Matrix& generator_inverse(int i) const { return invs_[i]; }

 private:
  std::vector<Matrix> gens_, invs_;
  int dim_hint_ = 0;
};

class ProductPresentation {
 public:
  explicit ProductPresentation(RepresentationPair rep) : rep_(std::move(rep)) {
    for (std::size_t i = 0; i < rep_.generators_1.size(); ++i)
      for (const auto* m : {&rep_.generators_1[i], &rep_.generators_2[i]}) {
        if ((*m - Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff() < 1e-9 ||
            (*m + Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff() < 1e-9)
          throw std::invalid_argument("ProductPresentation: generator acts as identity");
      }
  }

  int count() const { return static_cast<int>(rep_.generators_1.size()); }
  const RepresentationPair& rep() const { return rep_; }

 private:
  RepresentationPair rep_;
};

// ---------------------------------------------------------------------------
// model policies

struct SlOrbitModel {
  // elements are carried as accumulated (matrix, inverse) pairs so that deep
  // words keep relative accuracy in the small singular values
  using GroupElement = GroupPair;
  using FlagType = Flag;

  SlPresentation pres;
  BasePoint x;
  TypeVector theta;

  int generator_count() const { return pres.count(); }
  GroupElement identity() const {
    const Matrix id = Matrix::Identity(pres.dim(), pres.dim());
    return {id, id};
  }

  GroupElement step(const GroupElement& g, int letter) const {
    const int i = std::abs(letter) - 1;
    if (letter > 0) return {g.m * pres.generator(i), pres.generator_inverse(i) * g.minv};
    return {g.m * pres.generator_inverse(i), pres.generator(i) * g.minv};
  }

  // scale-invariant hash scalars
  std::pair<double, double> hash_scalars(const GroupElement& g) const {
    const double f = g.m.norm();
    return {g.m.sum() / f, std::log(f)};
  }

  bool same(const GroupElement& a, const GroupElement& b) const {
    return (a.m - b.m).norm() <= 1e-9 * std::max(a.m.norm(), b.m.norm());
  }

  struct Annotation {
    Vector sigma;
    double d_F, d_R;
    std::optional<FlagType> flag;
    bool overflow;
  };

  Annotation annotate(const GroupElement& g) const {
    const CartanVector cv = cartan_projection(g, x);
    Annotation a{cv.sigma(), killing_inner(cv.sigma(), theta.theta()),
                 killing_norm(cv.sigma()), std::nullopt,
                 cv.sigma()[0] - cv.sigma()[cv.size() - 1] > tol::kSigmaSpreadCap};
    if (!a.overflow) {
      try {
        a.flag = attracting_flag(g, x);
      } catch (const std::domain_error&) {
      }
    }
    return a;
  }
};

struct ProductOrbitModel {
  using GroupElement = std::pair<Eigen::Matrix2d, Eigen::Matrix2d>;
  using FlagType = ProductFlag;

  ProductPresentation pres;

  int generator_count() const { return pres.count(); }
  GroupElement identity() const {
    return {Eigen::Matrix2d::Identity(), Eigen::Matrix2d::Identity()};
  }

  GroupElement step(const GroupElement& g, int letter) const {
    const int i = std::abs(letter) - 1;
    const auto& r = pres.rep();
    if (letter > 0) return {g.first * r.generators_1[i], g.second * r.generators_2[i]};
    return {g.first * r.generators_1[i].inverse(), g.second * r.generators_2[i].inverse()};
  }

  // sign-invariant: +-m act identically on H^2
  std::pair<double, double> hash_scalars(const GroupElement& g) const {
    const double f1 = g.first.norm(), f2 = g.second.norm();
    return {std::abs(g.first.sum()) / f1 + 1.618 * std::abs(g.second.sum()) / f2,
            std::log(f1) + 1.618 * std::log(f2)};
  }

  bool same(const GroupElement& a, const GroupElement& b) const {
    const auto close = [](const Eigen::Matrix2d& p, const Eigen::Matrix2d& q) {
      const double s = 1e-9 * std::max(p.norm(), q.norm());
      return (p - q).norm() <= s || (p + q).norm() <= s;
    };
    return close(a.first, b.first) && close(a.second, b.second);
  }

  struct Annotation {
    Vector sigma;  // (d_1, d_2)
    double d_F, d_R;
    std::optional<FlagType> flag;
    bool overflow;
  };

  Annotation annotate(const GroupElement& g) const {
    const UpperHalfPlanePoint i{0.0, 1.0};
    const double d1 = hyperbolic_distance(i, moebius(g.first, i));
    const double d2 = hyperbolic_distance(i, moebius(g.second, i));
    Vector sigma(2);
    sigma << d1, d2;
    Annotation a{sigma, 0.5 * (d1 + d2), std::sqrt(d1 * d1 + d2 * d2), std::nullopt,
                 std::max(d1, d2) > tol::kSigmaSpreadCap};
    if (!a.overflow) {
      try {
        a.flag = ProductFlag{attracting_boundary_point(g.first),
                             attracting_boundary_point(g.second)};
      } catch (const std::domain_error&) {
      }
    }
    return a;
  }
};

// ---------------------------------------------------------------------------
// orbit ball

template <class Model>
struct OrbitElement {
  Word word;
  typename Model::GroupElement matrix;
  Vector sigma;
  double d_F = 0.0, d_R = 0.0;
  std::optional<typename Model::FlagType> flag;
  int word_length = 0;
};

struct EnumerationOptions {
  std::optional<double> radius_cap;  // Finsler; words beyond cap + slack not expanded
  double prune_slack = 4.0;
  int threads = 1;
  std::size_t max_elements = 6'000'000;
};

template <class Model>
struct OrbitBall {
  Model model;
  std::vector<OrbitElement<Model>> elements;  // sorted by (d_F, shortlex word)
  int max_word_length = 0;
  std::size_t dedup_count = 0;
  bool truncated_by_overflow = false;
  double frontier_min_dF = std::numeric_limits<double>::infinity();
  double frontier_min_dR = std::numeric_limits<double>::infinity();
  std::optional<double> radius_cap;  // completeness is clipped here when pruned

  std::vector<double> distances(MetricTag tag) const {
    std::vector<double> out;
    out.reserve(elements.size());
    for (const auto& e : elements) out.push_back(tag == MetricTag::F ? e.d_F : e.d_R);
    return out;  // already sorted for F; R needs a sort by the caller
  }
};

namespace detail {

inline std::int64_t grid_key(double s1, double s2, int shift1, int shift2) {
  const double q = 1e-6;
  const auto cell = [&](double v, int shift) {
    return static_cast<std::int64_t>(std::floor(v / q + 0.5 * shift));
  };
  return cell(s1, shift1) * 0x9E3779B97F4A7C15LL + cell(s2, shift2);
}

}  // namespace detail

template <class Model>
OrbitBall<Model> enumerate_ball(Model model, int max_word_length,
                                const EnumerationOptions& opts = {}) {
  if (max_word_length < 1)
    throw std::invalid_argument("enumerate_ball: max_word_length must be >= 1");

  OrbitBall<Model> ball{std::move(model)};
  ball.max_word_length = max_word_length;
  ball.radius_cap = opts.radius_cap;

  auto& elems = ball.elements;
  elems.push_back({Word{}, ball.model.identity(), Vector{}, 0.0, 0.0, std::nullopt, 0});

  // dedup map: coarse grid cells on two scalars -> element indices; equal
  // elements may straddle a cell boundary, so lookups probe the half-shifted
  // grids as well, then compare matrices exactly
  std::unordered_map<std::int64_t, std::vector<std::size_t>> cells;
  const auto insert_or_find = [&](const typename Model::GroupElement& g,
                                  std::size_t candidate_index) -> std::optional<std::size_t> {
    const auto [s1, s2] = ball.model.hash_scalars(g);
    for (int a : {0, 1})
      for (int b : {0, 1}) {
        const auto it = cells.find(detail::grid_key(s1, s2, a, b));
        if (it == cells.end()) continue;
        for (std::size_t idx : it->second)
          if (ball.model.same(elems[idx].matrix, g)) return idx;
      }
    for (int a : {0, 1})
      for (int b : {0, 1})
        cells[detail::grid_key(s1, s2, a, b)].push_back(candidate_index);
    return std::nullopt;
  };
  insert_or_find(elems[0].matrix, 0);

  const int n_gens = ball.model.generator_count();
  std::vector<std::size_t> frontier{0};
  std::vector<char> expandable{1};  // parallel to elems

  const auto annotate_range = [&](std::size_t lo) {
    detail::parallel_for(elems.size() - lo, opts.threads, [&](std::size_t k) {
      auto& e = elems[lo + k];
      const auto a = ball.model.annotate(e.matrix);
      e.sigma = a.sigma;
      e.d_F = a.d_F;
      e.d_R = a.d_R;
      e.flag = a.flag;
      if (a.overflow) expandable[lo + k] = 2;  // mark for truncation
    });
  };

  for (int depth = 1; depth <= max_word_length; ++depth) {
    const std::size_t first_new = elems.size();
    for (std::size_t fi : frontier) {
      const int last = elems[fi].word.empty() ? 0 : elems[fi].word.back();
      for (int gi = 1; gi <= n_gens; ++gi)
        for (int sign : {1, -1}) {
          const int letter = sign * gi;
          if (letter == -last) continue;  // free reduction
          typename Model::GroupElement g = ball.model.step(elems[fi].matrix, letter);
          if (auto existing = insert_or_find(g, elems.size())) {
            ++ball.dedup_count;
            continue;
          }
          Word w = elems[fi].word;
          w.push_back(static_cast<std::int8_t>(letter));
          elems.push_back({std::move(w), std::move(g), Vector{}, 0.0, 0.0, std::nullopt, depth});
          expandable.push_back(1);
          if (elems.size() > opts.max_elements)
            throw std::runtime_error("enumerate_ball: memory budget exceeded after " +
                                     std::to_string(first_new) + " completed elements");
        }
    }
    annotate_range(first_new);

    frontier.clear();
    for (std::size_t i = first_new; i < elems.size(); ++i) {
      if (expandable[i] == 2) {
        ball.truncated_by_overflow = true;
        continue;
      }
      if (opts.radius_cap && elems[i].d_F > *opts.radius_cap + opts.prune_slack) continue;
      frontier.push_back(i);
    }
    if (frontier.empty()) break;
  }

  for (std::size_t i : frontier) {
    ball.frontier_min_dF = std::min(ball.frontier_min_dF, elems[i].d_F);
    ball.frontier_min_dR = std::min(ball.frontier_min_dR, elems[i].d_R);
  }

  std::sort(elems.begin(), elems.end(), [](const auto& a, const auto& b) {
    if (a.d_F != b.d_F) return a.d_F < b.d_F;
    return detail::word_less(a.word, b.word);
  });
  return ball;
}

template <class Model>
double completeness_radius(const OrbitBall<Model>& ball, MetricTag tag) {
  if (ball.elements.empty()) throw std::invalid_argument("completeness_radius: empty ball");
  double r = tag == MetricTag::F ? ball.frontier_min_dF : ball.frontier_min_dR;
  if (ball.radius_cap) r = std::min(r, *ball.radius_cap);
  return r;
}

template <class Model>
std::size_t counting_function(const OrbitBall<Model>& ball, double r, MetricTag tag) {
  if (r < 0.0) throw std::invalid_argument("counting_function: negative radius");
  if (r > completeness_radius(ball, tag))
    throw std::domain_error("counting_function: radius " + std::to_string(r) +
                            " beyond completeness radius; enumerate a deeper ball");
  std::size_t n = 0;
  for (const auto& e : ball.elements)
    if ((tag == MetricTag::F ? e.d_F : e.d_R) < r) ++n;
  return n;
}

template <class Model>
ExponentEstimate critical_exponent(const OrbitBall<Model>& ball, MetricTag tag,
                                   double window_fraction = 0.5, int n_samples = 32) {
  std::vector<double> d = ball.distances(tag);
  std::sort(d.begin(), d.end());
  return fit_exponent(d, completeness_radius(ball, tag), window_fraction, n_samples);
}

// Fit of the eqn d_F >= d_R / L - A over the ball: L from a least-squares
// line through the origin, A the smallest feasible offset.
template <class Model>
std::pair<double, double> metric_comparison_fit(const OrbitBall<Model>& ball) {
  double num = 0.0, den = 0.0;
  for (const auto& e : ball.elements) {
    num += e.d_R * e.d_F;
    den += e.d_F * e.d_F;
  }
  const double big_l = den > 0.0 ? std::max(1.0, num / den) : 1.0;
  double a = 0.0;
  for (const auto& e : ball.elements) a = std::max(a, e.d_R / big_l - e.d_F);
  return {big_l, a};
}

struct RootExponents {
  ExponentEstimate delta_1_kplus1;
  ExponentEstimate delta_1_2;
};

// Hilbert and simple-root exponents from the per-element sigma vectors. The
// Hilbert distances are exactly d_F / sqrt(k+1), so that estimate is the
// Finsler fit rescaled to machine precision.
inline RootExponents root_exponents(const OrbitBall<SlOrbitModel>& ball,
                                    double window_fraction = 0.5, int n_samples = 32) {
  const double root = std::sqrt(static_cast<double>(ball.model.pres.dim()));
  std::vector<double> hilbert, simple;
  hilbert.reserve(ball.elements.size());
  simple.reserve(ball.elements.size());
  double frontier_simple = std::numeric_limits<double>::infinity();
  for (const auto& e : ball.elements) {
    if (e.word_length == 0) {
      hilbert.push_back(0.0);
      simple.push_back(0.0);
      continue;
    }
    hilbert.push_back(e.d_F / root);
    simple.push_back(e.sigma[0] - e.sigma[1]);
    if (e.word_length == ball.max_word_length)
      frontier_simple = std::min(frontier_simple, simple.back());
  }
  RootExponents out;
  std::sort(hilbert.begin(), hilbert.end());
  out.delta_1_kplus1 =
      fit_exponent(hilbert, completeness_radius(ball, MetricTag::F) / root,
                   window_fraction, n_samples);
  std::sort(simple.begin(), simple.end());
  out.delta_1_2 = fit_exponent(simple, frontier_simple, window_fraction, n_samples);
  return out;
}

namespace detail {

inline bool conical_member(const OrbitBall<SlOrbitModel>& ball,
                           const OrbitElement<SlOrbitModel>& e, const Flag& tau, double c) {
  return shadow_contains_proxy(ball.model.x, ball.model.x, e.matrix, c, tau, ball.model.theta);
}

inline bool conical_member(const OrbitBall<ProductOrbitModel>& ball,
                           const OrbitElement<ProductOrbitModel>& e, const ProductFlag& tau,
                           double c) {
  const UpperHalfPlanePoint i{0.0, 1.0};
  const ProductPoint x = ProductPoint::base();
  const ProductPoint y(moebius(e.matrix.first, i), moebius(e.matrix.second, i));
  const double b = product_busemann(x, y, tau);
  return 0.5 * (e.d_F + b) >= e.d_F - c;
}

}  // namespace detail

// Restricted counting along the cone toward tau, via the Gromov-product
// defect proxy; the fitted slope is the conical exponent estimate.
template <class Model>
ExponentEstimate conical_exponent_estimate(const OrbitBall<Model>& ball,
                                           const typename Model::FlagType& tau, double c,
                                           int threads = 1, double window_fraction = 0.5,
                                           int n_samples = 32) {
  if (!(c > 0.0)) throw std::invalid_argument("conical_exponent_estimate: c must be positive");
  std::vector<char> keep(ball.elements.size(), 0);
  detail::parallel_for(ball.elements.size(), threads, [&](std::size_t i) {
    const auto& e = ball.elements[i];
    if (e.word_length == 0) {
      keep[i] = 1;
      return;
    }
    keep[i] = detail::conical_member(ball, e, tau, c) ? 1 : 0;
  });
  std::vector<double> dists;
  const double r_complete = completeness_radius(ball, MetricTag::F);
  for (std::size_t i = 0; i < keep.size(); ++i)
    if (keep[i]) dists.push_back(ball.elements[i].d_F);
  std::sort(dists.begin(), dists.end());
  std::size_t in_window = 0;
  for (double d : dists)
    if (d >= 0.5 * r_complete && d < r_complete) ++in_window;
  if (in_window < 8)
    throw std::domain_error("conical_exponent_estimate: too few conical points in window (" +
                            std::to_string(in_window) + ")");
  return fit_exponent(dists, r_complete, window_fraction, n_samples);
}

// Irreducible SL(2) -> SL(3) representation on binary quadratic forms in the
// orthonormal basis {e1^2, sqrt2 e1 e2, e2^2}.
inline Matrix symmetric_square_lift(const Eigen::Matrix2d& g) {
  if (std::abs(g.determinant() - 1.0) > 1e-9)
    throw std::invalid_argument("symmetric_square_lift: determinant must be 1");
  const double a = g(0, 0), b = g(0, 1), c = g(1, 0), d = g(1, 1);
  const double s = std::sqrt(2.0);
  Matrix m(3, 3);
  m << a * a, s * a * b, b * b,
       s * a * c, a * d + b * c, s * b * d,
       c * c, s * c * d, d * d;
  return m;
}

}  // namespace anosov
