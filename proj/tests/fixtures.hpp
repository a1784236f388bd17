#pragma once

// Frozen one-time oracle values for the insufficient reference map
// (annulus(0.5) power 2 against the registered series:J=40 family).
// Regenerate with the `make_fixtures` tool; it prints production-resolution
// (res 48) and double-quadrature-resolution (res 96) statistics over the
// modulus grid {0.55, 0.625, 0.7, 0.775, 0.85} x angles {0, 2, 4}:
//
//   res  48: max_gap_norm = 1.1055845832860651   min_gap_eig = 3.161e-08
//   res  96: max_gap_norm = 0.95259525569166226  min_gap_eig = 3.172e-08
//   z = 0.7: gap_norm     = 0.0013711313566134   (res 48; res 96 agrees to 8 digits)
//            min_gap_eig  = 3.1806e-08           (res 48; res 96: 3.172e-08)
//   max_score_gap     = 74.2896262568689         (identical at both resolutions)
//   max_ratio_spread  = 2.9987215812031125       (identical at both resolutions)
//
// The max gap norm lives near the inner boundary where it is a property of
// the truncated J=40 family (at J=80 it shrinks to 7.93e-3); the recorded
// floors below are half of the weaker oracle reading, which still leaves
// every floor far above 10x its tolerance.

namespace fixtures {

inline constexpr double kAnnulusPow2GapFloor = 0.45;
inline constexpr double kAnnulusPow2GapAtZ07Lo = 1.3701e-3;
inline constexpr double kAnnulusPow2GapAtZ07Hi = 1.3721e-3;
inline constexpr double kAnnulusPow2DeltaPos = 1.5e-8;  // min gap eigenvalue at z=0.7
inline constexpr double kAnnulusPow2ScoreFloor = 37.0;
inline constexpr double kAnnulusPow2RatioFloor = 1.49;

}  // namespace fixtures
