#pragma once

// Seeded (set, ball) pairs for estimating the relative isoperimetric
// constant on voxel sets.  The calibration tool scans one seed range to
// freeze the constants; tests rescan a disjoint range.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

#include "perimeter_lab/gallery.hpp"
#include "perimeter_lab/gap_audit.hpp"

namespace perimeter_lab {

struct IsoperimetricCase {
  VoxelSet set;
  Ball ball;
  std::string kind;  // "half_space", "centered_half_space", "disk" or "blobs"
};

inline IsoperimetricCase isoperimetric_case(int dim, std::uint64_t seed) {
  SplitMix64 rng(seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(dim));
  const std::int64_t n_across = dim == 2 ? 64 : 20;
  const GridGeometry g = GridGeometry::centered(dim, n_across, 1.0, 2);
  const double h = g.spacing();
  IsoperimetricCase out;
  for (int a = 0; a < dim; ++a) out.ball.center[a] = rng.uniform(-0.5, 0.5);
  out.ball.radius = rng.uniform(3.0 * h, 0.45);
  const Point c = out.ball.center;

  switch (seed % 4) {
    case 0: {
      // Half-space through a point near the ball center; half the cases snap
      // the normal to an axis and the offset to a grid plane.
      Point normal{0, 0, 0};
      double offset = 0.0;
      if (rng.uniform() < 0.5) {
        const int axis = static_cast<int>(rng.below(dim));
        normal[axis] = 1.0;
        const double x = c[axis] + rng.uniform(-0.3, 0.3) * out.ball.radius;
        offset = g.plane(axis, static_cast<std::int64_t>(std::llround((x - g.origin(axis)) / h)));
      } else {
        double norm = 0.0;
        for (int a = 0; a < dim; ++a) normal[a] = rng.uniform(-1.0, 1.0), norm += normal[a] * normal[a];
        norm = std::sqrt(std::max(norm, 1e-12));
        double dot = 0.0;
        for (int a = 0; a < dim; ++a) normal[a] /= norm, dot += normal[a] * c[a];
        offset = dot + rng.uniform(-0.5, 0.5) * out.ball.radius;
      }
      out.kind = "half_space";
      out.set = VoxelSet(g, detail::rasterize(g, [&](const Point& p) {
                           double s = 0.0;
                           for (int a = 0; a < dim; ++a) s += normal[a] * p[a];
                           return s < offset;
                         }));
      break;
    }
    case 1: {
      Point q{0, 0, 0};
      for (int a = 0; a < dim; ++a) q[a] = c[a] + rng.uniform(-1.0, 1.0) * out.ball.radius;
      const double rho = rng.uniform(2.0 * h, 1.5 * out.ball.radius);
      out.kind = "disk";
      out.set = VoxelSet(g, detail::rasterize(g, [&](const Point& p) {
                           double s = 0.0;
                           for (int a = 0; a < dim; ++a) s += (p[a] - q[a]) * (p[a] - q[a]);
                           return s < rho * rho;
                         }));
      break;
    }
    case 2: {
      // The balanced split: axis plane through a ball center on a grid vertex.
      const int axis = static_cast<int>(rng.below(dim));
      for (int a = 0; a < dim; ++a)
        out.ball.center[a] = g.plane(a, static_cast<std::int64_t>(std::llround((c[a] - g.origin(a)) / h)));
      const double offset = out.ball.center[axis];
      out.kind = "centered_half_space";
      out.set = VoxelSet(g, detail::rasterize(g, [&](const Point& p) { return p[axis] < offset; }));
      break;
    }
    default: {
      GalleryParams params;
      params.seed = rng.next();
      params.values["min_size"] = 4.0 * h;
      params.values["max_size"] = 0.8;
      out.kind = "blobs";
      out.set = gallery("random_blobs", params, g).voxels();
      break;
    }
  }
  return out;
}

struct IsoperimetricScan {
  double max_ratio = 0.0;
  std::uint64_t argmax_seed = 0;
  std::string argmax_kind;
  std::size_t informative = 0;  // cases with both sides of positive volume
};

inline IsoperimetricScan scan_isoperimetric(int dim, std::uint64_t first_seed, std::uint64_t last_seed) {
  IsoperimetricScan scan;
  for (std::uint64_t s = first_seed; s <= last_seed; ++s) {
    const IsoperimetricCase c = isoperimetric_case(dim, s);
    const IsoperimetricSample r = isoperimetric_ratio(c.set, c.ball);
    if (r.min_volume_side <= 0.0) continue;
    ++scan.informative;
    if (r.ratio > scan.max_ratio) {
      scan.max_ratio = r.ratio;
      scan.argmax_seed = s;
      scan.argmax_kind = c.kind;
    }
  }
  return scan;
}

}  // namespace perimeter_lab
