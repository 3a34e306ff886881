#pragma once

#include <cmath>
#include <vector>

#include "anosov/orbit_engine.hpp"

// Built-in example groups. Two projective families in SL(3) via the
// symmetric-square lift of Fuchsian groups, and two surface-group pairs in
// the product model: the same genus-2 octagon structure on both factors, and
// that structure paired with a deformed (non-conjugate) one.

namespace anosov {
namespace presets {

inline Eigen::Matrix2d rotation(double angle) {
  Eigen::Matrix2d m;
  m << std::cos(angle / 2), std::sin(angle / 2), -std::sin(angle / 2), std::cos(angle / 2);
  return m;
}

inline Eigen::Matrix2d translation(double length) {
  Eigen::Matrix2d m = Eigen::Matrix2d::Zero();
  m(0, 0) = std::exp(length / 2);
  m(1, 1) = std::exp(-length / 2);
  return m;
}

// cyclic: one hyperbolic element, lifted
inline std::vector<Matrix> cyclic_generators() {
  return {symmetric_square_lift(translation(2.0))};
}

// two hyperbolic 2x2 generators with disjoint unlinked axes (0, inf) and
// (1, 3); verified free to working depth by the growth-count tests
inline std::pair<Eigen::Matrix2d, Eigen::Matrix2d> schottky_pair() {
  const Eigen::Matrix2d a = translation(4.0 * std::log(2.0));
  Eigen::Matrix2d h;
  h << 3, 1, 1, 1;
  h /= std::sqrt(2.0);
  const Eigen::Matrix2d b = h * a * h.inverse();
  return {a, b};
}

inline std::vector<Matrix> schottky_sym2_generators() {
  const auto [a, b] = schottky_pair();
  return {symmetric_square_lift(a), symmetric_square_lift(b)};
}

// Genus-2 surface group from a hyperbolic octagon: four translations along
// axes through the origin of the disk at angles (0, alpha, pi/2, pi/2+alpha)
// with lengths (l_even, l_odd, l_even, l_odd), written in the upper
// half-plane with the axis directions realized by rotations about i.
inline std::vector<Eigen::Matrix2d> octagon_generators(double l_even, double l_odd,
                                                       double alpha) {
  const double half_pi = std::acos(0.0) * 1.0;  // pi/2
  const double phis[4] = {0.0, alpha, half_pi, half_pi + alpha};
  const double lens[4] = {l_even, l_odd, l_even, l_odd};
  std::vector<Eigen::Matrix2d> out;
  for (int k = 0; k < 4; ++k)
    out.push_back(rotation(phis[k]) * translation(lens[k]) * rotation(-phis[k]));
  return out;
}

// single defining relation of the octagon group, used for dedup validation
inline std::vector<int> surface_relator() { return {1, -2, 3, -4, -1, 2, -3, 4}; }

inline double regular_octagon_length() {
  return 2.0 * std::acosh(1.0 + std::sqrt(2.0));
}

inline std::vector<Eigen::Matrix2d> regular_surface_generators() {
  const double l = regular_octagon_length();
  const double quarter_pi = std::atan(1.0);
  return octagon_generators(l, l, quarter_pi);
}

// A non-conjugate structure on the same group: the even axes lengthened by
// 35%, the odd lengths and the axis angle solved (Newton continuation from
// the regular structure along the relator variety) so the defining relation
// still closes; the relator residual is checked in tests.
inline std::vector<Eigen::Matrix2d> bent_surface_generators() {
  const double l_even = 1.35 * regular_octagon_length();
  const double l_odd = 3.6910936777359784;
  const double alpha = 0.1879870701794533;
  return octagon_generators(l_even, l_odd, alpha);
}

inline RepresentationPair diagonal_surface_pair() {
  const auto g = regular_surface_generators();
  return RepresentationPair(g, g);
}

inline RepresentationPair bent_surface_pair() {
  return RepresentationPair(regular_surface_generators(), bent_surface_generators());
}

}  // namespace presets
}  // namespace anosov
