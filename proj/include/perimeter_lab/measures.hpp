#pragma once

// Exact volume, perimeter and Hausdorff masses of voxel-with-crack domains,
// pointwise densities and Federer classification, plus ball/sphere
// integrals used by the covering and audit modules.
//
// Conventions: Omega^1 restricted to a sphere or facet is "inside an occupied
// cell" (grid planes are null for transversal surfaces); perimeter lives on
// faces between an occupied and an unoccupied cell; cracks carry no
// perimeter.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <variant>
#include <vector>

#include "perimeter_lab/ball_geometry.hpp"
#include "perimeter_lab/grid.hpp"

namespace perimeter_lab {

using Region = std::variant<Ball, AxisBox>;

struct MeasureReport {
  double volume = 0.0;
  double perimeter = 0.0;
  double crack_mass = 0.0;
  std::int64_t boundary_face_count = 0;
  std::int64_t crack_face_count = 0;
  std::int64_t occupied_cells = 0;
  /// H^{n-1}(boundary \ Omega^0) = perimeter + crack mass; always finite here.
  double boundary_mass_outside_exterior = 0.0;
  bool finite = true;
};

/// Calls fn(face, outward_sign) for every face between an occupied and an
/// unoccupied cell whose lower cell lies in [lo - 1, hi] per axis.
/// outward_sign is +1 when the lower cell is the occupied one.
template <typename Fn>
void for_each_boundary_face(const VoxelSet& vs, CellIndex lo, CellIndex hi, Fn&& fn) {
  const GridGeometry& g = vs.geometry();
  const int n = g.dim();
  CellIndex start, stop;
  for (int a = 0; a < n; ++a) {
    start[a] = std::max<std::int64_t>(lo[a] - 1, -1);
    stop[a] = std::min<std::int64_t>(hi[a], g.cells(a) - 1);
  }
  CellIndex c = start;
  if (n == 2) c[2] = 0, stop[2] = 0, start[2] = 0;
  for (c[2] = start[2]; c[2] <= stop[2]; ++c[2])
    for (c[1] = start[1]; c[1] <= stop[1]; ++c[1])
      for (c[0] = start[0]; c[0] <= stop[0]; ++c[0]) {
        const bool self = vs.occupied(c);
        for (int a = 0; a < n; ++a) {
          bool outside_range = false;
          for (int b = 0; b < n; ++b)
            if (b != a && c[b] < 0) outside_range = true;
          if (outside_range) continue;
          const bool up = vs.occupied(c.shifted(a, 1));
          if (self != up) fn(Face{c, a, Side::positive}, self ? +1 : -1);
        }
      }
}

template <typename Fn>
void for_each_boundary_face(const VoxelSet& vs, Fn&& fn) {
  const GridGeometry& g = vs.geometry();
  CellIndex lo, hi;
  for (int a = 0; a < g.dim(); ++a) hi[a] = g.cells(a) - 1;
  for_each_boundary_face(vs, lo, hi, std::forward<Fn>(fn));
}

inline std::int64_t boundary_face_count(const VoxelSet& vs) {
  std::int64_t count = 0;
  for_each_boundary_face(vs, [&](const Face&, int) { ++count; });
  return count;
}

inline double perimeter(const VoxelSet& vs) {
  return static_cast<double>(boundary_face_count(vs)) * vs.geometry().face_area();
}

inline double volume(const VoxelSet& vs) { return static_cast<double>(vs.count()) * vs.geometry().cell_volume(); }

inline double face_set_mass(const CrackSet& faces, const GridGeometry& g) {
  return static_cast<double>(faces.size()) * g.face_area();
}

inline MeasureReport measure(const Domain& d) {
  MeasureReport r;
  const GridGeometry& g = d.geometry();
  r.occupied_cells = d.voxels().count();
  r.volume = static_cast<double>(r.occupied_cells) * g.cell_volume();
  r.boundary_face_count = boundary_face_count(d.voxels());
  r.perimeter = static_cast<double>(r.boundary_face_count) * g.face_area();
  r.crack_face_count = static_cast<std::int64_t>(d.cracks().size());
  r.crack_mass = face_set_mass(d.cracks(), g);
  r.boundary_mass_outside_exterior = r.perimeter + r.crack_mass;
  return r;
}

// ---------------------------------------------------------------------------
// Regions

namespace detail {

inline void require_within_grid(const GridGeometry& g, const Region& w) {
  constexpr double slack = 1e-12;
  bool ok = true;
  if (const auto* b = std::get_if<Ball>(&w)) {
    if (!(b->radius > 0.0)) throw Error(ErrorKind::RegionOutsideGrid, "ball radius must be positive");
    for (int a = 0; a < g.dim(); ++a)
      ok = ok && b->center[a] - b->radius >= g.lo(a) - slack && b->center[a] + b->radius <= g.hi(a) + slack;
  } else {
    const auto& box = std::get<AxisBox>(w);
    for (int a = 0; a < g.dim(); ++a) ok = ok && box.lo[a] >= g.lo(a) - slack && box.hi[a] <= g.hi(a) + slack;
  }
  if (!ok) throw Error(ErrorKind::RegionOutsideGrid, "region extends beyond the grid box");
}

/// Inclusive cell-index bounds of the cells meeting [lo, hi] per axis.
inline std::pair<CellIndex, CellIndex> cell_range(const GridGeometry& g, const Point& lo, const Point& hi) {
  CellIndex a, b;
  for (int k = 0; k < g.dim(); ++k) {
    a[k] = std::clamp<std::int64_t>(static_cast<std::int64_t>(std::floor(g.grid_coord(k, lo[k]))), 0, g.cells(k) - 1);
    b[k] = std::clamp<std::int64_t>(static_cast<std::int64_t>(std::floor(g.grid_coord(k, hi[k]))), 0, g.cells(k) - 1);
  }
  return {a, b};
}

inline std::pair<CellIndex, CellIndex> ball_cell_range(const GridGeometry& g, const Ball& b) {
  Point lo{0, 0, 0}, hi{0, 0, 0};
  for (int k = 0; k < g.dim(); ++k) {
    lo[k] = b.center[k] - b.radius;
    hi[k] = b.center[k] + b.radius;
  }
  return cell_range(g, lo, hi);
}

/// Physical extent of a face: plane coordinate and tangential intervals.
struct FaceGeometry {
  int axis;
  double plane;
  Point lo, hi;  // tangential extents; entries at `axis` unused
};

inline FaceGeometry face_geometry(const GridGeometry& g, const Face& f) {
  FaceGeometry fg{f.axis, g.plane(f.axis, f.cell[f.axis] + 1), {0, 0, 0}, {0, 0, 0}};
  for (int a = 0; a < g.dim(); ++a) {
    fg.lo[a] = g.plane(a, f.cell[a]);
    fg.hi[a] = fg.lo[a] + g.spacing();
  }
  return fg;
}

inline double face_ball_mass(const GridGeometry& g, const Face& f, const Ball& b) {
  const FaceGeometry fg = face_geometry(g, f);
  const double d = fg.plane - b.center[f.axis];
  if (std::abs(d) >= b.radius) return 0.0;
  if (g.dim() == 2) {
    const int t = 1 - f.axis;
    return planar::segment_disk_length(fg.lo[t], fg.hi[t], fg.plane, b.center[t], b.center[f.axis], b.radius);
  }
  const int t1 = (f.axis + 1) % 3, t2 = (f.axis + 2) % 3;
  const double rho = std::sqrt(b.radius * b.radius - d * d);
  return planar::disk_rect_area(b.center[t1], b.center[t2], rho, fg.lo[t1], fg.hi[t1], fg.lo[t2], fg.hi[t2]);
}

inline double face_box_mass(const GridGeometry& g, const Face& f, const AxisBox& w) {
  const FaceGeometry fg = face_geometry(g, f);
  if (!(fg.plane > w.lo[f.axis] && fg.plane < w.hi[f.axis])) return 0.0;
  double area = 1.0;
  for (int a = 0; a < g.dim(); ++a) {
    if (a == f.axis) continue;
    area *= std::max(0.0, std::min(fg.hi[a], w.hi[a]) - std::max(fg.lo[a], w.lo[a]));
  }
  return area;
}

}  // namespace detail

/// P(E; W) = H^{n-1}(reduced boundary ∩ W) for an open region W.
namespace detail {

/// relative_perimeter without the region-in-grid check; cells beyond the
/// grid are empty.
inline double relative_perimeter_unchecked(const VoxelSet& vs, const Region& w) {
  const GridGeometry& g = vs.geometry();
  double total = 0.0;
  if (const auto* b = std::get_if<Ball>(&w)) {
    auto [lo, hi] = detail::ball_cell_range(g, *b);
    for_each_boundary_face(vs, lo, hi, [&](const Face& f, int) { total += detail::face_ball_mass(g, f, *b); });
  } else {
    const auto& box = std::get<AxisBox>(w);
    auto [lo, hi] = detail::cell_range(g, box.lo, box.hi);
    for_each_boundary_face(vs, lo, hi, [&](const Face& f, int) { total += detail::face_box_mass(g, f, box); });
  }
  return total;
}

}  // namespace detail

inline double relative_perimeter(const VoxelSet& vs, const Region& w) {
  detail::require_within_grid(vs.geometry(), w);
  return detail::relative_perimeter_unchecked(vs, w);
}

inline double relative_perimeter(const Domain& d, const Region& w) { return relative_perimeter(d.voxels(), w); }

// ---------------------------------------------------------------------------
// Ball volumes

struct BallVolume {
  double volume = 0.0;
  bool all_occupied = false;  // every cell meeting the ball is occupied
  bool none_occupied = false;
};

namespace detail {

/// Occupied area of the disk (cx, cy, rho) within layer `layer` (axis-2 index).
inline BallVolume disk_layer_area(const VoxelSet& vs, std::int64_t layer, double cx, double cy, double rho) {
  const GridGeometry& g = vs.geometry();
  const double h = g.spacing();
  BallVolume out{0.0, true, true};
  if (rho <= 0.0) return out;
  const double ox = g.origin(0), oy = g.origin(1);
  const std::int64_t n0 = g.cells(0);
  const auto j_lo = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::floor((cy - rho - oy) / h)));
  const auto j_hi = std::min<std::int64_t>(g.cells(1) - 1, static_cast<std::int64_t>(std::floor((cy + rho - oy) / h)));
  for (std::int64_t j = j_lo; j <= j_hi; ++j) {
    const double y0 = oy + static_cast<double>(j) * h, y1 = y0 + h;
    const double near = (cy >= y0 && cy <= y1) ? 0.0 : std::min(std::abs(y0 - cy), std::abs(y1 - cy));
    const double far = std::max(std::abs(y0 - cy), std::abs(y1 - cy));
    if (near >= rho) continue;
    const double wo = std::sqrt(rho * rho - near * near);
    const auto o_lo = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::floor((cx - wo - ox) / h)));
    const auto o_hi = std::min<std::int64_t>(n0 - 1, static_cast<std::int64_t>(std::ceil((cx + wo - ox) / h)) - 1);
    if (o_hi < o_lo) continue;
    std::int64_t f_lo = o_hi + 1, f_hi = o_hi;  // empty full range by default
    if (far < rho) {
      const double wi = std::sqrt(rho * rho - far * far);
      f_lo = std::max(o_lo, static_cast<std::int64_t>(std::ceil((cx - wi - ox) / h)));
      f_hi = std::min(o_hi, static_cast<std::int64_t>(std::floor((cx + wi - ox) / h)) - 1);
      if (f_hi < f_lo) f_lo = o_hi + 1, f_hi = o_hi;
    }
    CellIndex row;
    row[1] = j;
    row[2] = layer;
    const std::int64_t occ_all = vs.row_count(row, o_lo, o_hi + 1);
    const std::int64_t span = o_hi - o_lo + 1;
    if (occ_all != span) out.all_occupied = false;
    if (occ_all != 0) out.none_occupied = false;
    if (occ_all == 0) continue;
    if (f_hi >= f_lo) out.volume += static_cast<double>(vs.row_count(row, f_lo, f_hi + 1)) * h * h;
    for (std::int64_t i = o_lo; i <= o_hi; ++i) {
      if (i >= f_lo && i <= f_hi) continue;
      row[0] = i;
      if (!vs.occupied(row)) continue;
      const double x0 = ox + static_cast<double>(i) * h;
      out.volume += planar::disk_rect_area(cx, cy, rho, x0, x0 + h, y0, y1);
    }
  }
  return out;
}

}  // namespace detail

/// |E ∩ B|: closed form in 2D, adaptive quadrature (rel. tol 1e-9) in 3D.
inline BallVolume occupied_volume_in_ball(const VoxelSet& vs, const Ball& b) {
  const GridGeometry& g = vs.geometry();
  if (g.dim() == 2) return detail::disk_layer_area(vs, 0, b.center[0], b.center[1], b.radius);
  const double h = g.spacing();
  const double r = b.radius, cz = b.center[2];
  const double full = ball_volume(3, r);
  BallVolume out{0.0, true, true};
  const auto k_lo = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::floor(g.grid_coord(2, cz - r))));
  const auto k_hi = std::min<std::int64_t>(g.cells(2) - 1, static_cast<std::int64_t>(std::floor(g.grid_coord(2, cz + r))));
  for (std::int64_t k = k_lo; k <= k_hi; ++k) {
    const double z0 = std::max(g.plane(2, k), cz - r), z1 = std::min(g.plane(2, k + 1), cz + r);
    if (z1 <= z0) continue;
    const double zn = std::clamp(cz, z0, z1);
    const BallVolume widest =
        detail::disk_layer_area(vs, k, b.center[0], b.center[1], std::sqrt(std::max(0.0, r * r - (zn - cz) * (zn - cz))));
    out.all_occupied = out.all_occupied && widest.all_occupied;
    out.none_occupied = out.none_occupied && widest.none_occupied;
    if (widest.none_occupied) continue;
    auto slice = [&](double z) {
      const double rho = std::sqrt(std::max(0.0, r * r - (z - cz) * (z - cz)));
      return detail::disk_layer_area(vs, k, b.center[0], b.center[1], rho).volume;
    };
    out.volume += integrate_adaptive(slice, z0, z1, 1e-10 * full);
  }
  (void)h;
  if (out.all_occupied) out.volume = full;
  if (out.none_occupied) out.volume = 0.0;
  return out;
}

/// |Omega ∩ B_r(x)| / |B_r(x)|; exactly 1 (or 0) when every cell meeting
/// the ball is occupied (or empty).
inline double density(const VoxelSet& vs, const Point& x, double r) {
  const Ball b{x, r};
  detail::require_within_grid(vs.geometry(), b);
  const BallVolume v = occupied_volume_in_ball(vs, b);
  if (v.all_occupied) return 1.0;
  if (v.none_occupied) return 0.0;
  return v.volume / ball_volume(vs.geometry().dim(), r);
}

inline double density(const Domain& d, const Point& x, double r) { return density(d.voxels(), x, r); }

// ---------------------------------------------------------------------------
// Spheres

/// Moves r by 1e-9 h when the sphere is tangent (within 1e-12 h) to a grid
/// plane, so sphere ∩ face sets are H^{n-1}-null.
inline Ball nudge_off_planes(const GridGeometry& g, Ball b, bool* nudged = nullptr) {
  const double h = g.spacing();
  bool moved = false;
  for (int iter = 0; iter < 8; ++iter) {
    bool touching = false;
    for (int a = 0; a < g.dim() && !touching; ++a) {
      for (double s : {-1.0, 1.0}) {
        const double u = g.grid_coord(a, b.center[a] + s * b.radius);
        if (std::abs(u - std::round(u)) * h < 1e-12 * h) touching = true;
      }
    }
    if (!touching) break;
    b.radius += 1e-9 * h;
    moved = true;
  }
  if (nudged) *nudged = moved;
  return b;
}

namespace detail {

inline double sphere_cap_inside_unchecked(const VoxelSet& vs, const Ball& b) {
  const GridGeometry& g = vs.geometry();
  const double h = g.spacing();
  const double r = b.radius;
  if (g.dim() == 2) {
    auto inside = [&](std::int64_t i, std::int64_t j) { return vs.occupied(CellIndex{{i, j, 0}}); };
    return r * planar::circle_angle_inside(b.center[0], b.center[1], r, g.origin(0), g.origin(1), h, inside);
  }
  const double cz = b.center[2];
  double total = 0.0;
  const auto k_lo = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::floor(g.grid_coord(2, cz - r))));
  const auto k_hi = std::min<std::int64_t>(g.cells(2) - 1, static_cast<std::int64_t>(std::floor(g.grid_coord(2, cz + r))));
  for (std::int64_t k = k_lo; k <= k_hi; ++k) {
    const double z0 = std::max(g.plane(2, k), cz - r), z1 = std::min(g.plane(2, k + 1), cz + r);
    if (z1 <= z0) continue;
    auto inside = [&](std::int64_t i, std::int64_t j) { return vs.occupied(CellIndex{{i, j, k}}); };
    auto theta = [&](double z) {
      const double rho = std::sqrt(std::max(0.0, r * r - (z - cz) * (z - cz)));
      if (rho <= 0.0) {
        // Degenerate slice: the pole lies in a single cell.
        CellIndex c{{static_cast<std::int64_t>(std::floor(g.grid_coord(0, b.center[0]))),
                     static_cast<std::int64_t>(std::floor(g.grid_coord(1, b.center[1]))), k}};
        return vs.occupied(c) ? 2.0 * std::numbers::pi : 0.0;
      }
      return planar::circle_angle_inside(b.center[0], b.center[1], rho, g.origin(0), g.origin(1), h, inside);
    };
    // dA = r dθ dz on the sphere (Archimedes' hat-box).
    total += r * integrate_adaptive(theta, z0, z1, 1e-10 * sphere_area(3, r));
  }
  return total;
}

}  // namespace detail

/// H^{n-1}(∂B ∩ Omega^1): arc lengths in 2D, quadrature over z-slices in 3D.
inline double sphere_cap_inside(const VoxelSet& vs, const Ball& b) {
  detail::require_within_grid(vs.geometry(), b);
  return detail::sphere_cap_inside_unchecked(vs, b);
}

inline double sphere_cap_inside(const Domain& d, const Ball& b) { return sphere_cap_inside(d.voxels(), b); }

struct DivergenceCheck {
  double lhs = 0.0;  // H^{n-1}(∂B ∩ Omega^1)
  double rhs = 0.0;  // n |Omega ∩ B| / r + P(Omega; B)
  bool holds = false;
  double margin = 0.0;  // rhs - lhs
  double volume = 0.0;
  double relative_perimeter = 0.0;
  bool radius_nudged = false;
  /// Set when |Omega ∩ B| <= |B| / 2: lhs / P(Omega; B), the empirical
  /// constant of the collapsed form lhs <= C(n) P(Omega; B).
  std::optional<double> collapsed_ratio;
  Ball ball;
};

inline DivergenceCheck divergence_estimate_check(const Domain& d, const Ball& ball) {
  const GridGeometry& g = d.geometry();
  DivergenceCheck out;
  out.ball = nudge_off_planes(g, ball, &out.radius_nudged);
  const Ball& b = out.ball;
  detail::require_within_grid(g, b);
  const int n = g.dim();
  out.lhs = sphere_cap_inside(d.voxels(), b);
  out.volume = occupied_volume_in_ball(d.voxels(), b).volume;
  out.relative_perimeter = relative_perimeter(d.voxels(), b);
  out.rhs = n * out.volume / b.radius + out.relative_perimeter;
  out.margin = out.rhs - out.lhs;
  // Rounding slack only: both sides are closed forms in 2D.
  out.holds = out.lhs <= out.rhs + 1e-9 * std::max(1.0, std::abs(out.rhs));
  if (out.volume <= 0.5 * ball_volume(n, b.radius) && out.relative_perimeter > 0.0)
    out.collapsed_ratio = out.lhs / out.relative_perimeter;
  return out;
}

// ---------------------------------------------------------------------------
// Point classification

struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  friend bool operator==(const Rational& a, const Rational& b) { return a.num * b.den == b.num * a.den; }
};

enum class PointKind { density_one, density_zero, reduced_boundary, boundary_other };

struct PointClass {
  PointKind kind = PointKind::density_zero;
  Rational density;
  /// For reduced_boundary: normal axis and sign of the outer normal.
  int normal_axis = -1;
  int normal_sign = 0;
  /// x lies on the topological boundary (for density_one: on a crack face).
  bool boundary_topological = false;
};

namespace detail {

struct Incidence {
  int dim = 2;
  std::array<bool, kMaxDim> on_plane{false, false, false};
  CellIndex base;  // lowest incident cell
  int cells = 1;
};

inline Incidence incidence(const GridGeometry& g, const Point& x) {
  Incidence inc;
  inc.dim = g.dim();
  for (int a = 0; a < g.dim(); ++a) {
    const double u = g.grid_coord(a, x[a]);
    const double k = std::round(u);
    if (std::abs(u - k) < 1e-9) {
      inc.on_plane[a] = true;
      inc.base[a] = static_cast<std::int64_t>(k) - 1;
      inc.cells *= 2;
    } else {
      inc.base[a] = static_cast<std::int64_t>(std::floor(u));
    }
  }
  return inc;
}

/// Incident cell for bit pattern `bits` (bit a set -> upper side along a).
inline CellIndex incident_cell(const Incidence& inc, int bits) {
  CellIndex c = inc.base;
  for (int a = 0; a < inc.dim; ++a)
    if (inc.on_plane[a] && ((bits >> a) & 1)) c[a] += 1;
  return c;
}

}  // namespace detail

/// Exact limit density from the cells incident to x, and Federer class.
inline PointClass classify_point(const Domain& d, const Point& x) {
  const GridGeometry& g = d.geometry();
  const auto inc = detail::incidence(g, x);
  const int n = g.dim();
  std::array<bool, 8> occ{};
  int occupied = 0;
  for (int bits = 0; bits < (1 << n); ++bits) {
    bool valid = true;
    for (int a = 0; a < n; ++a)
      if (!inc.on_plane[a] && ((bits >> a) & 1)) valid = false;
    if (!valid) continue;
    occ[static_cast<std::size_t>(bits)] = d.voxels().occupied(detail::incident_cell(inc, bits));
    occupied += occ[static_cast<std::size_t>(bits)] ? 1 : 0;
  }
  PointClass pc;
  const std::int64_t gcd = std::gcd<std::int64_t, std::int64_t>(occupied, inc.cells);
  pc.density = Rational{occupied / std::max<std::int64_t>(gcd, 1), inc.cells / std::max<std::int64_t>(gcd, 1)};
  if (occupied == 0) {
    pc.kind = PointKind::density_zero;
    return pc;
  }
  if (occupied == inc.cells) {
    pc.kind = PointKind::density_one;
    // On the boundary iff x lies on a closed crack face.
    for (int a = 0; a < n && !pc.boundary_topological; ++a) {
      if (!inc.on_plane[a]) continue;
      for (int bits = 0; bits < (1 << n); ++bits) {
        if ((bits >> a) & 1) continue;
        bool valid = true;
        for (int b = 0; b < n; ++b)
          if (b != a && !inc.on_plane[b] && ((bits >> b) & 1)) valid = false;
        if (!valid) continue;
        if (d.is_crack(detail::incident_cell(inc, bits), a)) {
          pc.boundary_topological = true;
          break;
        }
      }
    }
    return pc;
  }
  pc.boundary_topological = true;
  pc.kind = PointKind::boundary_other;
  // Reduced boundary: occupancy is a half-space split along one axis.
  for (int a = 0; a < n; ++a) {
    if (!inc.on_plane[a]) continue;
    std::optional<bool> lower, upper;
    bool split = true;
    for (int bits = 0; bits < (1 << n) && split; ++bits) {
      bool valid = true;
      for (int b = 0; b < n; ++b)
        if (!inc.on_plane[b] && ((bits >> b) & 1)) valid = false;
      if (!valid) continue;
      auto& side = ((bits >> a) & 1) ? upper : lower;
      const bool v = occ[static_cast<std::size_t>(bits)];
      if (side && *side != v) split = false;
      side = v;
    }
    if (split && lower && upper && *lower != *upper) {
      pc.kind = PointKind::reduced_boundary;
      pc.normal_axis = a;
      pc.normal_sign = *lower ? +1 : -1;
      return pc;
    }
  }
  return pc;
}

// ---------------------------------------------------------------------------
// Boundary decomposition

struct SkeletonReport {
  /// Points of the (n-2)-skeleton where the boundary is not flat: grid
  /// vertices in 2D, grid-edge midpoints in 3D.
  std::vector<Point> singular_points;
  /// H^{n-2} mass of the singular skeleton (a count in 2D, a length in 3D).
  double singular_mass = 0.0;
  /// Its H^{n-1} mass, zero by construction.
  double hn1_mass = 0.0;
  /// ∂Omega ∩ Omega^0 is empty for voxel-crack domains (verified).
  bool exterior_boundary_empty = true;
};

struct BoundaryDecomposition {
  std::vector<Face> reduced_faces;
  std::vector<int> outward_signs;
  std::vector<Face> crack_faces;
  double reduced_mass = 0.0;
  double crack_mass = 0.0;
  SkeletonReport skeleton;
};

inline BoundaryDecomposition boundary_decomposition(const Domain& d) {
  const GridGeometry& g = d.geometry();
  BoundaryDecomposition out;
  for_each_boundary_face(d.voxels(), [&](const Face& f, int sign) {
    out.reduced_faces.push_back(f);
    out.outward_signs.push_back(sign);
  });
  out.crack_faces = d.cracks().faces();
  out.reduced_mass = static_cast<double>(out.reduced_faces.size()) * g.face_area();
  out.crack_mass = static_cast<double>(out.crack_faces.size()) * g.face_area();

  // Every boundary face has an occupied side, so no boundary point has
  // density zero.
  for (std::size_t i = 0; i < out.reduced_faces.size(); ++i) {
    const Face& f = out.reduced_faces[i];
    if (!d.voxels().occupied(f.cell) && !d.voxels().occupied(f.cell.shifted(f.axis, 1)))
      out.skeleton.exterior_boundary_empty = false;
  }

  const double h = g.spacing();
  if (g.dim() == 2) {
    for (std::int64_t j = 1; j < g.cells(1); ++j)
      for (std::int64_t i = 1; i < g.cells(0); ++i) {
        const Point p{g.plane(0, i), g.plane(1, j), 0.0};
        if (classify_point(d, p).kind == PointKind::boundary_other) out.skeleton.singular_points.push_back(p);
      }
    out.skeleton.singular_mass = static_cast<double>(out.skeleton.singular_points.size());
  } else {
    for (int e = 0; e < 3; ++e) {
      const int a = (e + 1) % 3, b = (e + 2) % 3;
      for (std::int64_t k = 0; k < g.cells(e); ++k)
        for (std::int64_t j = 1; j < g.cells(b); ++j)
          for (std::int64_t i = 1; i < g.cells(a); ++i) {
            Point p{0, 0, 0};
            p[e] = g.plane(e, k) + 0.5 * h;
            p[a] = g.plane(a, i);
            p[b] = g.plane(b, j);
            if (classify_point(d, p).kind == PointKind::boundary_other) out.skeleton.singular_points.push_back(p);
          }
    }
    out.skeleton.singular_mass = static_cast<double>(out.skeleton.singular_points.size()) * h;
  }
  return out;
}

}  // namespace perimeter_lab
