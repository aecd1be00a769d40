#pragma once

// Empirical constants frozen from seeded calibration runs
// (tools/calibrate_isoperimetric.cpp, seeds 1..1000 per dimension).
// Regression tests check that a disjoint seed range never exceeds them.

namespace perimeter_lab {

/// Upper bound for min(|E∩B|, |B\E|)^{(n-1)/n} / P(E; B) over voxel sets E
/// and balls B, rounded up to 0.01.
inline constexpr double kIsoperimetricConstant2D = 0.63;
inline constexpr double kIsoperimetricConstant3D = 0.53;

inline constexpr double isoperimetric_constant(int dim) {
  return dim == 2 ? kIsoperimetricConstant2D : kIsoperimetricConstant3D;
}

/// Classical planar Besicovitch ceiling used as a sanity bound on the
/// greedy family count (external constant).
inline constexpr int kPlanarBesicovitchCeiling = 19;

}  // namespace perimeter_lab
