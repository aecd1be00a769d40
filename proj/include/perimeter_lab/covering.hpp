#pragma once

// Cover-and-remove construction of interior approximations with explicit
// perimeter and volume budgets: flat boxes over the reduced boundary, ball
// tilings over the cracks, and density-selected balls over low-density
// boundary points, merged into bounded-overlap families and subtracted from
// Omega on a refined grid.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <tuple>
#include <unordered_set>
#include <vector>

#include "json.hpp"
#include "perimeter_lab/approx.hpp"
#include "perimeter_lab/constants.hpp"
#include "perimeter_lab/measures.hpp"

namespace perimeter_lab {

struct FlatPiece {
  int axis = 0;                 // normal axis
  std::int64_t plane_index = 0; // grid plane the piece lies on
  double offset = 0.0;          // physical coordinate of that plane
  int normal_sign = 0;          // +1 / -1 outward normal along axis, 0 for crack pieces
  Point lo{0, 0, 0}, hi{0, 0, 0};  // tangential extents; lo[axis] == hi[axis] == offset
  std::int64_t face_count = 0;
  double area = 0.0;
};

namespace detail {

inline std::array<int, 2> tangential_axes(int dim, int axis) {
  if (dim == 2) return {1 - axis, -1};
  return {(axis + 1) % 3, (axis + 2) % 3};
}

/// Greedy merge of coplanar faces (tangential index pairs) into rectangles.
inline std::vector<std::pair<std::array<std::int64_t, 2>, std::array<std::int64_t, 2>>> merge_rectangles(
    std::vector<std::array<std::int64_t, 2>> cells) {
  std::sort(cells.begin(), cells.end(), [](const auto& a, const auto& b) {
    return std::tie(a[1], a[0]) < std::tie(b[1], b[0]);
  });
  auto key = [](std::int64_t t1, std::int64_t t2) { return (t2 << 24) ^ t1; };
  std::unordered_set<std::int64_t> present, used;
  for (const auto& c : cells) present.insert(key(c[0], c[1]));
  auto free_at = [&](std::int64_t t1, std::int64_t t2) {
    const auto k = key(t1, t2);
    return present.count(k) && !used.count(k);
  };
  std::vector<std::pair<std::array<std::int64_t, 2>, std::array<std::int64_t, 2>>> rects;
  for (const auto& c : cells) {
    if (!free_at(c[0], c[1])) continue;
    std::int64_t w = 1;
    while (free_at(c[0] + w, c[1])) ++w;
    std::int64_t rows = 1;
    for (;; ++rows) {
      bool full = true;
      for (std::int64_t i = 0; i < w && full; ++i) full = free_at(c[0] + i, c[1] + rows);
      if (!full) break;
    }
    for (std::int64_t j = 0; j < rows; ++j)
      for (std::int64_t i = 0; i < w; ++i) used.insert(key(c[0] + i, c[1] + j));
    rects.push_back({c, {w, rows}});
  }
  return rects;
}

/// Groups canonical faces by (axis, plane, sign) and merges each group.
inline std::vector<FlatPiece> pieces_from_faces(const GridGeometry& g, const std::vector<Face>& faces,
                                                const std::vector<int>& signs) {
  std::map<std::tuple<int, std::int64_t, int>, std::vector<std::array<std::int64_t, 2>>> groups;
  for (std::size_t i = 0; i < faces.size(); ++i) {
    const Face& f = faces[i];
    const auto t = tangential_axes(g.dim(), f.axis);
    groups[{f.axis, f.cell[f.axis] + 1, signs[i]}].push_back({f.cell[t[0]], t[1] >= 0 ? f.cell[t[1]] : 0});
  }
  const double h = g.spacing();
  std::vector<FlatPiece> pieces;
  for (auto& [k, cells] : groups) {
    const auto [axis, plane, sign] = k;
    const auto t = tangential_axes(g.dim(), axis);
    for (const auto& [start, size] : merge_rectangles(std::move(cells))) {
      FlatPiece p;
      p.axis = axis;
      p.plane_index = plane;
      p.offset = g.plane(axis, plane);
      p.normal_sign = sign;
      p.lo[axis] = p.hi[axis] = p.offset;
      p.lo[t[0]] = g.plane(t[0], start[0]);
      p.hi[t[0]] = g.plane(t[0], start[0] + size[0]);
      p.face_count = size[0];
      if (t[1] >= 0) {
        p.lo[t[1]] = g.plane(t[1], start[1]);
        p.hi[t[1]] = g.plane(t[1], start[1] + size[1]);
        p.face_count *= size[1];
      }
      p.area = static_cast<double>(p.face_count) * std::pow(h, g.dim() - 1);
      pieces.push_back(p);
    }
  }
  return pieces;
}

/// Area of the facet {x_axis = c} x prod_t [lo_t, hi_t] that lies in
/// Omega^1 (inside an occupied cell, or between two occupied cells).
inline double facet_interior_mass(const VoxelSet& vs, int axis, double c, const Point& lo, const Point& hi) {
  const GridGeometry& g = vs.geometry();
  const double h = g.spacing();
  const auto t = tangential_axes(g.dim(), axis);
  const double u = g.grid_coord(axis, c);
  const double ur = std::round(u);
  const bool on_plane = std::abs(u - ur) < 1e-12;
  const auto layer = static_cast<std::int64_t>(on_plane ? ur : std::floor(u));
  if (layer < 0 || layer > g.cells(axis)) return 0.0;
  auto range = [&](int a) {
    const auto i0 = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::floor(g.grid_coord(a, lo[a]))));
    const auto i1 = std::min<std::int64_t>(g.cells(a) - 1, static_cast<std::int64_t>(std::floor(g.grid_coord(a, hi[a]))));
    return std::pair{i0, i1};
  };
  auto overlap = [&](int a, std::int64_t i) {
    const double c0 = g.plane(a, i);
    return std::max(0.0, std::min(c0 + h, hi[a]) - std::max(c0, lo[a]));
  };
  const auto [a0, a1] = range(t[0]);
  std::int64_t b0 = 0, b1 = 0;
  if (t[1] >= 0) std::tie(b0, b1) = range(t[1]);
  double total = 0.0;
  for (std::int64_t j = b0; j <= b1; ++j)
    for (std::int64_t i = a0; i <= a1; ++i) {
      CellIndex cell;
      cell[axis] = layer;
      cell[t[0]] = i;
      if (t[1] >= 0) cell[t[1]] = j;
      const bool inside = on_plane ? vs.occupied(cell) && vs.occupied(cell.shifted(axis, -1)) : vs.occupied(cell);
      if (!inside) continue;
      double area = overlap(t[0], i);
      if (t[1] >= 0) area *= overlap(t[1], j);
      total += area;
    }
  return total;
}

/// H^{n-1}(∂W ∩ Omega^1) for an axis-aligned box W.
inline double box_interior_perimeter(const VoxelSet& vs, const AxisBox& w) {
  const int n = vs.geometry().dim();
  double total = 0.0;
  for (int a = 0; a < n; ++a)
    for (double c : {w.lo[a], w.hi[a]}) total += facet_interior_mass(vs, a, c, w.lo, w.hi);
  return total;
}

/// Moves box coordinates lying within 1e-12 h of a grid plane outward by 1e-9 h.
inline AxisBox nudge_box(const GridGeometry& g, AxisBox b) {
  const double h = g.spacing();
  for (int a = 0; a < g.dim(); ++a) {
    auto near_plane = [&](double x) {
      const double u = g.grid_coord(a, x);
      return std::abs(u - std::round(u)) < 1e-12;
    };
    if (near_plane(b.lo[a])) b.lo[a] -= 1e-9 * h;
    if (near_plane(b.hi[a])) b.hi[a] += 1e-9 * h;
  }
  return b;
}

inline std::int64_t patch_count(double length, double side) {
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(length / side * (1.0 - 1e-12))));
}

}  // namespace detail

/// Maximal rectangles of coplanar, same-normal reduced-boundary faces.
inline std::vector<FlatPiece> flat_pieces(const Domain& d) {
  std::vector<Face> faces;
  std::vector<int> signs;
  for_each_boundary_face(d.voxels(), [&](const Face& f, int sign) {
    faces.push_back(f);
    signs.push_back(sign);
  });
  return detail::pieces_from_faces(d.geometry(), faces, signs);
}

/// Maximal rectangles of coplanar crack faces (normal_sign 0).
inline std::vector<FlatPiece> crack_pieces(const Domain& d) {
  const auto& faces = d.cracks().faces();
  return detail::pieces_from_faces(d.geometry(), faces, std::vector<int>(faces.size(), 0));
}

struct FlatBox {
  AxisBox box;
  std::size_t piece = 0;
  int axis = 0;
  double plane = 0.0;
  double patch_side = 0.0;   // largest tangential side of the patch
  double height_half = 0.0;  // half thickness normal to the plane
  double interior_perimeter = 0.0;  // H^{n-1}(∂box ∩ Omega^1)
  double volume = 0.0;
};

struct CoverBudget {
  double interior_perimeter = 0.0;  // Σ of per-element boundary mass in Omega^1
  double total_volume = 0.0;
  double target_mass = 0.0;         // H^{n-1} of the covered set
  double epsilon = 0.0;
  double constant = 0.0;            // the C in the budget inequalities
  double perimeter_bound = 0.0;
  double volume_bound = 0.0;
  bool holds = true;
};

/// Perimeter constant of the flat-box construction: side walls contribute at
/// most 4n·eps per unit of covered face area.
inline double box_constant(int dim) { return 4.0 * dim; }

/// Sphere-to-patch area ratio guaranteed by the crack tiling.
inline double crack_tiling_constant(int dim) {
  return dim == 2 ? 2.0 * std::numbers::pi : 8.0 * std::numbers::pi;
}

inline std::pair<std::vector<FlatBox>, CoverBudget> cover_reduced_boundary(const Domain& d,
                                                                          const std::vector<FlatPiece>& pieces,
                                                                          double eps) {
  if (!(eps > 0.0 && eps < 0.5)) throw Error(ErrorKind::InvalidGeometry, "eps must lie in (0, 1/2)");
  const GridGeometry& g = d.geometry();
  const int n = g.dim();
  std::vector<FlatBox> boxes;
  CoverBudget budget;
  budget.epsilon = eps;
  budget.constant = box_constant(n);
  for (std::size_t pi = 0; pi < pieces.size(); ++pi) {
    const FlatPiece& p = pieces[pi];
    budget.target_mass += p.area;
    const auto t = detail::tangential_axes(n, p.axis);
    std::array<std::int64_t, 2> count{1, 1};
    std::array<double, 2> side{0.0, 0.0};
    for (int k = 0; k < 2; ++k) {
      if (t[k] < 0) continue;
      const double len = p.hi[t[k]] - p.lo[t[k]];
      count[k] = detail::patch_count(len, eps);
      side[k] = len / static_cast<double>(count[k]);
    }
    const double diameter = std::max(side[0], side[1]);
    const double hh = eps * diameter;
    for (std::int64_t j = 0; j < count[1]; ++j)
      for (std::int64_t i = 0; i < count[0]; ++i) {
        AxisBox b;
        b.lo[p.axis] = p.offset - hh;
        b.hi[p.axis] = p.offset + hh;
        const std::array<std::int64_t, 2> idx{i, j};
        for (int k = 0; k < 2; ++k) {
          if (t[k] < 0) continue;
          b.lo[t[k]] = p.lo[t[k]] + static_cast<double>(idx[k]) * side[k] - hh;
          b.hi[t[k]] = p.lo[t[k]] + static_cast<double>(idx[k] + 1) * side[k] + hh;
        }
        FlatBox fb;
        fb.box = detail::nudge_box(g, b);
        fb.piece = pi;
        fb.axis = p.axis;
        fb.plane = p.offset;
        fb.patch_side = diameter;
        fb.height_half = hh;
        fb.interior_perimeter = detail::box_interior_perimeter(d.voxels(), fb.box);
        fb.volume = 1.0;
        for (int a = 0; a < n; ++a) fb.volume *= fb.box.hi[a] - fb.box.lo[a];
        budget.interior_perimeter += fb.interior_perimeter;
        budget.total_volume += fb.volume;
        boxes.push_back(fb);
      }
  }
  const double P = budget.target_mass;
  budget.perimeter_bound = (1.0 + budget.constant * eps) * P + eps;
  budget.volume_bound = std::pow(2.0, n) * eps * eps * (P + eps);
  budget.holds = budget.interior_perimeter <= budget.perimeter_bound * (1.0 + 1e-9) &&
                 budget.total_volume <= budget.volume_bound * (1.0 + 1e-9);
  if (!budget.holds) throw Error(ErrorKind::BudgetViolated, "flat-box budget exceeded");
  return {boxes, budget};
}

inline std::pair<std::vector<FlatBox>, CoverBudget> cover_reduced_boundary(const Domain& d, double eps) {
  return cover_reduced_boundary(d, flat_pieces(d), eps);
}

// ---------------------------------------------------------------------------
// Bounded-overlap families

struct BallCover {
  std::vector<Ball> balls;
  std::vector<int> family;      // family index per ball
  int families = 0;
  /// For greedy selections: per input ball, the index of a selected ball
  /// whose open interior contains the input ball's center.
  std::vector<std::size_t> covered_by;
  std::vector<std::size_t> source;  // input index of each selected ball
};

namespace detail {

/// Smallest k >= 0 with x * 2^k integral, or -1 if x is not finite.
inline int dyadic_scale(double x) {
  if (!std::isfinite(x)) return -1;
  int k = 0;
  double y = x;
  while (y != std::trunc(y) && k < 1100) {
    y *= 2.0;
    ++k;
  }
  return k;
}

struct ExactBall {
  Ball ball;
  int scale = 0;  // common dyadic scale of center and radius
};

inline ExactBall exact_ball(const Ball& b, int dim) {
  ExactBall e{b, dyadic_scale(b.radius)};
  for (int a = 0; a < dim; ++a) e.scale = std::max(e.scale, dyadic_scale(b.center[a]));
  return e;
}

/// Disjointness of two open balls.  Exact integer arithmetic when all data
/// are dyadic at a common scale with small magnitudes; otherwise a
/// conservative floating test that can only err toward "intersecting".
inline bool open_balls_disjoint(const ExactBall& p, const ExactBall& q, int dim) {
  const int k = std::max(p.scale, q.scale);
  constexpr double limit = 0x1.0p40;
  bool exact = k >= 0 && k < 200;
  std::array<std::int64_t, kMaxDim> dc{};
  std::int64_t rs = 0;
  if (exact) {
    auto fix = [&](double x, std::int64_t& out) {
      const double y = std::ldexp(x, k);
      if (std::abs(y) >= limit || y != std::trunc(y)) return false;
      out = static_cast<std::int64_t>(y);
      return true;
    };
    std::int64_t r1 = 0, r2 = 0;
    exact = fix(p.ball.radius, r1) && fix(q.ball.radius, r2);
    for (int a = 0; a < dim && exact; ++a) {
      std::int64_t c1 = 0, c2 = 0;
      exact = fix(p.ball.center[a], c1) && fix(q.ball.center[a], c2);
      dc[static_cast<std::size_t>(a)] = c1 - c2;
    }
    rs = r1 + r2;
  }
  if (exact) {
    __int128 d2 = 0;
    for (int a = 0; a < dim; ++a) d2 += static_cast<__int128>(dc[static_cast<std::size_t>(a)]) * dc[static_cast<std::size_t>(a)];
    return d2 >= static_cast<__int128>(rs) * rs;
  }
  double d2 = 0.0, mag = 0.0;
  for (int a = 0; a < dim; ++a) {
    const double dd = p.ball.center[a] - q.ball.center[a];
    d2 += dd * dd;
    mag += p.ball.center[a] * p.ball.center[a] + q.ball.center[a] * q.ball.center[a];
  }
  const double s = p.ball.radius + q.ball.radius;
  return d2 > s * s + 1e-12 * (s * s + mag);
}

/// Is x strictly inside the open ball?  Conservative toward "no".
inline bool strictly_inside(const Ball& b, const Point& x, int dim) {
  double d2 = 0.0;
  for (int a = 0; a < dim; ++a) d2 += (x[a] - b.center[a]) * (x[a] - b.center[a]);
  return d2 < b.radius * b.radius * (1.0 - 1e-12);
}

}  // namespace detail

/// Besicovitch-style selection: repeated passes in descending radius; a pass
/// picks balls whose centers are still uncovered and that are disjoint from
/// the pass's earlier picks.  Each pass is one family.
inline BallCover greedy_bounded_overlap(const std::vector<Ball>& balls, int dim) {
  BallCover out;
  const std::size_t m = balls.size();
  out.covered_by.assign(m, std::numeric_limits<std::size_t>::max());
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return balls[a].radius > balls[b].radius; });
  std::vector<detail::ExactBall> exact;
  exact.reserve(m);
  for (const auto& b : balls) exact.push_back(detail::exact_ball(b, dim));

  std::vector<bool> covered(m, false);
  std::size_t remaining = m;
  while (remaining > 0) {
    const int fam = out.families++;
    std::vector<std::size_t> members;  // input indices picked in this pass
    for (std::size_t idx : order) {
      if (covered[idx]) continue;
      bool disjoint = true;
      for (std::size_t j : members)
        if (!detail::open_balls_disjoint(exact[idx], exact[j], dim)) {
          disjoint = false;
          break;
        }
      if (!disjoint) continue;
      members.push_back(idx);
      const std::size_t sel = out.balls.size();
      out.balls.push_back(balls[idx]);
      out.family.push_back(fam);
      out.source.push_back(idx);
      // The picked center is covered by its own ball; mark the others.
      for (std::size_t q = 0; q < m; ++q) {
        if (covered[q]) continue;
        if (q == idx || detail::strictly_inside(balls[idx], balls[q].center, dim)) {
          covered[q] = true;
          out.covered_by[q] = sel;
          --remaining;
        }
      }
    }
  }
  return out;
}

/// Keeps every ball and assigns it to the first family where it is disjoint
/// from all members.
inline BallCover partition_disjoint_families(const std::vector<Ball>& balls, int dim) {
  BallCover out;
  out.balls = balls;
  out.family.assign(balls.size(), -1);
  out.covered_by.resize(balls.size());
  out.source.resize(balls.size());
  std::iota(out.covered_by.begin(), out.covered_by.end(), std::size_t{0});
  std::iota(out.source.begin(), out.source.end(), std::size_t{0});
  std::vector<detail::ExactBall> exact;
  for (const auto& b : balls) exact.push_back(detail::exact_ball(b, dim));
  std::vector<std::vector<std::size_t>> fams;
  for (std::size_t i = 0; i < balls.size(); ++i) {
    std::size_t f = 0;
    for (; f < fams.size(); ++f) {
      bool ok = true;
      for (std::size_t j : fams[f])
        if (!detail::open_balls_disjoint(exact[i], exact[j], dim)) {
          ok = false;
          break;
        }
      if (ok) break;
    }
    if (f == fams.size()) fams.emplace_back();
    fams[f].push_back(i);
    out.family[i] = static_cast<int>(f);
  }
  out.families = static_cast<int>(fams.size());
  return out;
}

/// Exhaustive verification that balls within each family are disjoint.
inline bool families_disjoint(const BallCover& cover, int dim) {
  std::vector<detail::ExactBall> exact;
  for (const auto& b : cover.balls) exact.push_back(detail::exact_ball(b, dim));
  for (std::size_t i = 0; i < cover.balls.size(); ++i)
    for (std::size_t j = i + 1; j < cover.balls.size(); ++j)
      if (cover.family[i] == cover.family[j] && !detail::open_balls_disjoint(exact[i], exact[j], dim)) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Crack and low-density covers

inline std::pair<BallCover, CoverBudget> cover_crack_set(const Domain& d, double eps) {
  if (!(eps > 0.0 && eps < 0.5)) throw Error(ErrorKind::InvalidGeometry, "eps must lie in (0, 1/2)");
  const GridGeometry& g = d.geometry();
  const int n = g.dim();
  CoverBudget budget;
  budget.epsilon = eps;
  budget.constant = crack_tiling_constant(n);
  std::vector<Ball> balls;
  for (const FlatPiece& p : crack_pieces(d)) {
    budget.target_mass += p.area;
    const auto t = detail::tangential_axes(n, p.axis);
    // Near-square patches: side at most eps and at most the piece's short side.
    double s = eps;
    for (int k = 0; k < 2; ++k)
      if (t[k] >= 0) s = std::min(s, p.hi[t[k]] - p.lo[t[k]]);
    std::array<std::int64_t, 2> count{1, 1};
    std::array<double, 2> side{0.0, 0.0};
    for (int k = 0; k < 2; ++k) {
      if (t[k] < 0) continue;
      count[k] = detail::patch_count(p.hi[t[k]] - p.lo[t[k]], s);
      side[k] = (p.hi[t[k]] - p.lo[t[k]]) / static_cast<double>(count[k]);
    }
    const double r = std::max(side[0], side[1]);
    for (std::int64_t j = 0; j < count[1]; ++j)
      for (std::int64_t i = 0; i < count[0]; ++i) {
        Ball b;
        b.radius = r;
        b.center[p.axis] = p.offset;
        const std::array<std::int64_t, 2> idx{i, j};
        for (int k = 0; k < 2; ++k)
          if (t[k] >= 0) b.center[t[k]] = p.lo[t[k]] + (static_cast<double>(idx[k]) + 0.5) * side[k];
        balls.push_back(b);
      }
  }
  for (const Ball& b : balls) {
    budget.interior_perimeter += sphere_area(n, b.radius);
    budget.total_volume += ball_volume(n, b.radius);
  }
  budget.perimeter_bound = budget.constant * budget.target_mass + eps;
  budget.volume_bound = budget.constant / n * eps * budget.target_mass;
  budget.holds = budget.interior_perimeter <= budget.perimeter_bound * (1.0 + 1e-9) &&
                 budget.total_volume <= budget.volume_bound * (1.0 + 1e-9) + 1e-300;
  if (!budget.holds) throw Error(ErrorKind::BudgetViolated, "crack-ball budget exceeded");
  return {partition_disjoint_families(balls, n), budget};
}

struct LowDensityBall {
  Ball ball;
  double density = 0.0;
  double cap = 0.0;                  // H^{n-1}(∂B ∩ Omega^1)
  double volume = 0.0;               // |Omega ∩ B|
  double relative_perimeter = 0.0;   // P(Omega; B)
  bool divergence_holds = true;
  bool collapsed_holds = true;       // cap <= C · P(Omega; B)
};

struct LowDensityCover {
  BallCover cover;
  std::vector<LowDensityBall> selected;  // aligned with cover.balls
  std::size_t targets = 0;
  double constant = 0.0;  // 1 + n (theta ω_n)^{1/n} Ĉ_iso
  double perimeter_sum = 0.0;  // Σ P(Omega; B) over selected balls
  CoverBudget budget;
};

/// Balls around boundary sample points where density(x, r) < theta for some
/// r ≤ eps from the halving sweep; theta = 0 selects nothing.
inline LowDensityCover cover_low_density_set(const Domain& d, double eps, double theta,
                                             const BoundarySampling& sampling = {}) {
  if (!(theta >= 0.0 && theta <= 0.5)) throw Error(ErrorKind::InvalidGeometry, "theta must lie in [0, 1/2]");
  if (!(eps > 0.0 && eps < 0.5)) throw Error(ErrorKind::InvalidGeometry, "eps must lie in (0, 1/2)");
  const GridGeometry& g = d.geometry();
  const int n = g.dim();
  const double h = g.spacing();
  LowDensityCover out;
  out.constant = 1.0 + n * std::pow(theta * unit_ball_volume(n), 1.0 / n) * isoperimetric_constant(n);
  out.budget.epsilon = eps;
  out.budget.constant = out.constant;
  if (theta == 0.0) return out;

  const auto bd = boundary_decomposition(d);
  std::vector<Point> points;
  const std::size_t stride = static_cast<std::size_t>(std::max<std::int64_t>(1, sampling.stride));
  if (sampling.face_centers)
    for (std::size_t i = 0; i < bd.reduced_faces.size(); i += stride) {
      const Face& f = bd.reduced_faces[i];
      Point p = g.cell_center(f.cell);
      p[f.axis] += 0.5 * h;
      points.push_back(p);
    }
  if (sampling.singular_points)
    for (std::size_t i = 0; i < bd.skeleton.singular_points.size(); i += stride)
      points.push_back(bd.skeleton.singular_points[i]);

  std::vector<Ball> candidates;
  for (const Point& x : points) {
    for (double r = eps; r >= 2.0 * h * (1.0 - 1e-12); r *= 0.5) {
      // Balls may reach past the grid box; everything there is empty.
      Ball b = nudge_off_planes(g, Ball{x, r});
      if (occupied_volume_in_ball(d.voxels(), b).volume / ball_volume(n, b.radius) < theta) {
        candidates.push_back(b);
        break;
      }
    }
  }
  out.targets = candidates.size();
  out.cover = greedy_bounded_overlap(candidates, n);
  for (const Ball& b : out.cover.balls) {
    LowDensityBall lb;
    lb.ball = b;
    const auto vol = occupied_volume_in_ball(d.voxels(), b);
    lb.volume = vol.volume;
    lb.density = vol.volume / ball_volume(n, b.radius);
    lb.cap = detail::sphere_cap_inside_unchecked(d.voxels(), b);
    lb.relative_perimeter = detail::relative_perimeter_unchecked(d.voxels(), b);
    const double slack = 1e-9 * sphere_area(n, b.radius);
    lb.divergence_holds = lb.cap <= n * lb.volume / b.radius + lb.relative_perimeter + slack;
    lb.collapsed_holds = lb.cap <= out.constant * lb.relative_perimeter + slack;
    out.perimeter_sum += lb.relative_perimeter;
    out.budget.interior_perimeter += lb.cap;
    out.budget.total_volume += ball_volume(n, b.radius);
    out.budget.holds = out.budget.holds && lb.divergence_holds && lb.collapsed_holds;
    out.selected.push_back(lb);
  }
  out.budget.perimeter_bound = out.constant * out.perimeter_sum;
  out.budget.volume_bound = out.budget.total_volume;
  return out;
}

// ---------------------------------------------------------------------------
// Assembly

struct AssemblyOptions {
  double eps = 0.05;
  int refine = 2;
  double theta = 0.0;  // low-density cover threshold; 0 disables it
};

struct AssemblyReport {
  Domain e;  // on the refined grid, crack free
  std::vector<FlatBox> boxes;
  CoverBudget box_budget;
  BallCover crack_cover;
  CoverBudget crack_budget;
  LowDensityCover low_cover;
  std::size_t dropped = 0;  // cover elements whose closure misses ∂Omega

  double perimeter_omega = 0.0;
  double crack_mass = 0.0;
  double perimeter_e = 0.0;
  double volume_gap = 0.0;
  double cover_perimeter = 0.0;  // Σ of per-element boundary mass in Omega^1
  double surcharge = 0.0;        // max(0, P(E) - cover_perimeter)
  std::int64_t cut_cells = 0;    // removed refined cells adjacent to kept ones
  double surcharge_allowance = 0.0;  // 2n (h/refine) · cut_cells
  /// (1 + C eps) P(Omega) + eps + C' crack_mass + eps + low-density caps + surcharge
  double bound = 0.0;
  bool bound_holds = false;
  bool contained = false;
};

namespace detail {

inline bool ball_meets_boundary(const Domain& d, const Ball& b) {
  const GridGeometry& g = d.geometry();
  auto [lo, hi] = ball_cell_range(g, b);
  bool hit = false;
  auto closed_face_near = [&](const Face& f) {
    const auto fg = face_geometry(g, f);
    double d2 = 0.0;
    for (int a = 0; a < g.dim(); ++a) {
      double lo_a = fg.lo[a], hi_a = fg.hi[a];
      if (a == f.axis) lo_a = hi_a = fg.plane;
      const double gap = std::max({0.0, lo_a - b.center[a], b.center[a] - hi_a});
      d2 += gap * gap;
    }
    return d2 <= b.radius * b.radius;
  };
  for_each_boundary_face(d.voxels(), lo, hi, [&](const Face& f, int) {
    if (!hit && closed_face_near(f)) hit = true;
  });
  for (const Face& f : d.cracks().faces())
    if (!hit && closed_face_near(f)) hit = true;
  return hit;
}

}  // namespace detail

inline AssemblyReport assemble_interior_approx(const Domain& d, const AssemblyOptions& opt) {
  if (!(opt.eps > 0.0 && opt.eps < 0.5)) throw Error(ErrorKind::InvalidGeometry, "eps must lie in (0, 1/2)");
  if (opt.refine < 2) throw Error(ErrorKind::RefinementTooCoarse, "refine factor must be at least 2");
  const GridGeometry& g = d.geometry();
  const int n = g.dim();
  AssemblyReport rep;
  const MeasureReport m = measure(d);
  rep.perimeter_omega = m.perimeter;
  rep.crack_mass = m.crack_mass;

  std::tie(rep.boxes, rep.box_budget) = cover_reduced_boundary(d, opt.eps);
  std::tie(rep.crack_cover, rep.crack_budget) = cover_crack_set(d, opt.eps);
  rep.low_cover = cover_low_density_set(d, opt.eps, opt.theta);
  if (!rep.low_cover.budget.holds) throw Error(ErrorKind::BudgetViolated, "low-density ball estimate failed");

  const Domain fine = refine_domain(d, opt.refine);
  const GridGeometry& fg = fine.geometry();
  const double hr = fg.spacing();

  std::vector<Ball> balls;
  std::vector<double> ball_mass;
  for (std::size_t i = 0; i < rep.crack_cover.balls.size(); ++i) {
    balls.push_back(rep.crack_cover.balls[i]);
    ball_mass.push_back(sphere_area(n, rep.crack_cover.balls[i].radius));
  }
  for (const auto& lb : rep.low_cover.selected) {
    if (!detail::ball_meets_boundary(d, lb.ball)) {
      ++rep.dropped;
      continue;
    }
    balls.push_back(lb.ball);
    ball_mass.push_back(lb.cap);
  }
  for (const auto& fb : rep.boxes)
    if (2.0 * fb.height_half < hr) throw Error(ErrorKind::RefinementTooCoarse, "flat box thinner than a refined cell");
  for (const auto& b : balls)
    if (2.0 * b.radius < hr) throw Error(ErrorKind::RefinementTooCoarse, "ball thinner than a refined cell");

  std::vector<std::uint8_t> keep(fine.voxels().data().begin(), fine.voxels().data().end());
  auto index_range = [&](int a, double lo, double hi) {
    const auto k0 = static_cast<std::int64_t>(std::floor(fg.grid_coord(a, lo) - 1e-9));
    const auto k1 = static_cast<std::int64_t>(std::ceil(fg.grid_coord(a, hi) + 1e-9)) - 1;
    return std::pair{std::max<std::int64_t>(k0, 0), std::min<std::int64_t>(k1, fg.cells(a) - 1)};
  };
  auto clear_box = [&](const Point& lo, const Point& hi, auto&& pred) {
    std::array<std::pair<std::int64_t, std::int64_t>, kMaxDim> r{{{0, 0}, {0, 0}, {0, 0}}};
    for (int a = 0; a < n; ++a) r[a] = index_range(a, lo[a], hi[a]);
    CellIndex c;
    for (c[2] = r[2].first; c[2] <= r[2].second; ++c[2])
      for (c[1] = r[1].first; c[1] <= r[1].second; ++c[1])
        for (c[0] = r[0].first; c[0] <= r[0].second; ++c[0])
          if (pred(c)) keep[static_cast<std::size_t>(fg.linear(c))] = 0;
  };
  double cover_perimeter = 0.0;
  for (const auto& fb : rep.boxes) {
    cover_perimeter += fb.interior_perimeter;
    clear_box(fb.box.lo, fb.box.hi, [](const CellIndex&) { return true; });
  }
  for (std::size_t i = 0; i < balls.size(); ++i) {
    const Ball& b = balls[i];
    cover_perimeter += ball_mass[i];
    Point lo{0, 0, 0}, hi{0, 0, 0};
    for (int a = 0; a < n; ++a) lo[a] = b.center[a] - b.radius, hi[a] = b.center[a] + b.radius;
    clear_box(lo, hi, [&](const CellIndex& c) {
      double d2 = 0.0;
      for (int a = 0; a < n; ++a) {
        const double c0 = fg.plane(a, c[a]), c1 = c0 + hr;
        const double gap = std::max({0.0, c0 - b.center[a], b.center[a] - c1});
        d2 += gap * gap;
      }
      return d2 < b.radius * b.radius + 1e-9 * hr * hr;
    });
  }

  VoxelSet e(fg, std::move(keep));
  rep.contained = containment_check(fine, e);
  std::int64_t removed = 0;
  for (std::int64_t lin = 0; lin < fg.cell_count(); ++lin) {
    if (!fine.voxels().occupied(lin) || e.occupied(lin)) continue;
    ++removed;
    const CellIndex c = fg.cell_at(lin);
    bool cut = false;
    for (int a = 0; a < n && !cut; ++a)
      for (int dir : {-1, 1})
        if (e.occupied(c.shifted(a, dir))) cut = true;
    if (cut) ++rep.cut_cells;
  }
  rep.volume_gap = static_cast<double>(removed) * fg.cell_volume();
  rep.perimeter_e = perimeter(e);
  rep.cover_perimeter = cover_perimeter;
  rep.surcharge = std::max(0.0, rep.perimeter_e - cover_perimeter);
  rep.surcharge_allowance = 2.0 * n * hr * static_cast<double>(rep.cut_cells) * std::pow(hr, n - 2);
  rep.bound = rep.box_budget.perimeter_bound + rep.crack_budget.perimeter_bound +
              rep.low_cover.budget.interior_perimeter + rep.surcharge;
  rep.bound_holds = rep.perimeter_e <= rep.bound * (1.0 + 1e-9);
  rep.e = make_domain(fg, std::move(e), CrackSet{});
  if (!rep.bound_holds) throw Error(ErrorKind::BudgetViolated, "assembled perimeter exceeds its budget");
  return rep;
}

// ---------------------------------------------------------------------------
// Serialization

inline nlohmann::json budget_json(const CoverBudget& b) {
  return {{"interior_perimeter", b.interior_perimeter}, {"total_volume", b.total_volume},
          {"target_mass", b.target_mass},               {"epsilon", b.epsilon},
          {"constant", b.constant},                     {"perimeter_bound", b.perimeter_bound},
          {"volume_bound", b.volume_bound},             {"holds", b.holds}};
}

inline nlohmann::json point_json(const Point& p, int dim) {
  auto j = nlohmann::json::array();
  for (int a = 0; a < dim; ++a) j.push_back(p[a]);
  return j;
}

inline nlohmann::json cover_json(const AssemblyReport& r, int dim) {
  nlohmann::json j;
  auto boxes = nlohmann::json::array();
  for (const auto& b : r.boxes)
    boxes.push_back({{"plane", {{"axis", b.axis}, {"offset", b.plane}}},
                     {"extent", {{"lo", point_json(b.box.lo, dim)}, {"hi", point_json(b.box.hi, dim)}}},
                     {"height", 2.0 * b.height_half},
                     {"interior_perimeter", b.interior_perimeter}});
  j["boxes"] = std::move(boxes);
  auto balls = nlohmann::json::array();
  for (std::size_t i = 0; i < r.crack_cover.balls.size(); ++i)
    balls.push_back({{"center", point_json(r.crack_cover.balls[i].center, dim)},
                     {"radius", r.crack_cover.balls[i].radius},
                     {"family", r.crack_cover.family[i]},
                     {"kind", "crack"}});
  for (std::size_t i = 0; i < r.low_cover.cover.balls.size(); ++i)
    balls.push_back({{"center", point_json(r.low_cover.cover.balls[i].center, dim)},
                     {"radius", r.low_cover.cover.balls[i].radius},
                     {"family", r.low_cover.cover.family[i]},
                     {"kind", "low_density"}});
  j["balls"] = std::move(balls);
  j["budgets"] = {{"boxes", budget_json(r.box_budget)},
                  {"cracks", budget_json(r.crack_budget)},
                  {"low_density", budget_json(r.low_cover.budget)}};
  j["result"] = {{"perimeter_omega", r.perimeter_omega}, {"crack_mass", r.crack_mass},
                 {"perimeter_e", r.perimeter_e},         {"volume_gap", r.volume_gap},
                 {"cover_perimeter", r.cover_perimeter}, {"surcharge", r.surcharge},
                 {"cut_cells", r.cut_cells},             {"bound", r.bound},
                 {"bound_holds", r.bound_holds},         {"contained", r.contained},
                 {"dropped", r.dropped}};
  return j;
}

}  // namespace perimeter_lab
