#pragma once

// Numerical tolerance tiers used across the library. Tests assert the
// documented contracts verbatim against these constants.

namespace anosov::tol {

inline constexpr double kExact = 1e-12;       // symmetry, closed-form identities
inline constexpr double kUnit = 1e-10;        // unit-norm / ordering checks
inline constexpr double kDet = 1e-9;          // determinant drift after renormalization
inline constexpr double kGeom = 1e-8;         // metric identities on fuzzed inputs
inline constexpr double kCocycle = 1e-6;      // Busemann cocycle defect
inline constexpr double kBusemann = 1e-7;     // doubling acceptance for the Busemann limit
inline constexpr double kGromovAgree = 1e-5;  // closed form vs parallel-set Gromov product

inline constexpr double kGapTolerance = 1e-6;          // singular value gap for regularity
inline constexpr double kAntipodality = 1e-10;         // antipodality test on flags
inline constexpr double kSigmaSpreadCap = 650.0;       // double-precision exponent guard
inline constexpr double kShadowRadiusMin = 0.25;       // r_proxy_min for proxy shadows
inline constexpr double kMassFloor = 1e-12;            // region mass floor in ratio checks

}  // namespace anosov::tol
