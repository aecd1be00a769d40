#pragma once

// Interior approximations E ⋐ Omega: crack-respecting erosion and
// superlevel sets of the mollified indicator, with the containment and
// boundary-density checks that decide whether they stay inside.

#include <cmath>
#include <cstdio>
#include <deque>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "perimeter_lab/domain_io.hpp"
#include "perimeter_lab/measures.hpp"

namespace perimeter_lab {

// ---------------------------------------------------------------------------
// Distance field and erosion

namespace detail {

/// Offsets of the 3^n - 1 Chebyshev neighbours.
inline std::vector<CellIndex> chebyshev_offsets(int dim) {
  std::vector<CellIndex> out;
  const int zr = dim == 3 ? 1 : 0;
  for (int dz = -zr; dz <= zr; ++dz)
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        if (dx == 0 && dy == 0 && dz == 0) continue;
        out.push_back(CellIndex{{dx, dy, dz}});
      }
  return out;
}

inline CellIndex add(const CellIndex& a, const CellIndex& b) {
  return CellIndex{{a[0] + b[0], a[1] + b[1], a[2] + b[2]}};
}

/// Marks occupied cells whose closed cell meets an obstacle: an unoccupied
/// Chebyshev neighbour accepted by `obstacle`, or a closed crack face.
template <typename Obstacle>
std::vector<std::uint8_t> touching_cells(const Domain& d, Obstacle&& obstacle) {
  const GridGeometry& g = d.geometry();
  const VoxelSet& vs = d.voxels();
  const auto offsets = chebyshev_offsets(g.dim());
  std::vector<std::uint8_t> mark(static_cast<std::size_t>(g.cell_count()), 0);
  g.for_each_cell([&](std::int64_t lin, const CellIndex& c) {
    if (!vs.occupied(lin)) return;
    for (const auto& o : offsets) {
      const CellIndex nb = add(c, o);
      if (!g.contains(nb)) continue;
      const std::int64_t nl = g.linear(nb);
      if (!vs.occupied(nl) && obstacle(nl)) {
        mark[static_cast<std::size_t>(lin)] = 1;
        return;
      }
    }
  });
  for (const Face& f : d.cracks().faces()) {
    // Cells whose closure meets the closed face: two layers across the face
    // plane and one-cell dilation tangentially.
    CellIndex lo = f.cell, hi = f.cell;
    hi[f.axis] += 1;
    for (int b = 0; b < g.dim(); ++b)
      if (b != f.axis) lo[b] -= 1, hi[b] += 1;
    CellIndex c;
    for (c[2] = lo[2]; c[2] <= hi[2]; ++c[2])
      for (c[1] = lo[1]; c[1] <= hi[1]; ++c[1])
        for (c[0] = lo[0]; c[0] <= hi[0]; ++c[0])
          if (vs.occupied(c)) mark[static_cast<std::size_t>(g.linear(c))] = 1;
  }
  return mark;
}

}  // namespace detail

/// Geodesic distance (multiples of h) from each occupied cell to the nearest
/// obstacle, moving between face-adjacent occupied cells and never across a
/// crack face.  Cells whose closed cell meets an obstacle have distance h.
/// Unoccupied cells for which `obstacle(lin)` is false are neither sources
/// nor passable.  Unoccupied cells get 0; unreachable occupied cells +inf.
template <typename Obstacle>
std::vector<double> crack_distance_field(const Domain& d, Obstacle&& obstacle) {
  const GridGeometry& g = d.geometry();
  const VoxelSet& vs = d.voxels();
  const double h = g.spacing();
  const auto sources = detail::touching_cells(d, obstacle);
  constexpr std::int64_t unset = -1;
  std::vector<std::int64_t> steps(static_cast<std::size_t>(g.cell_count()), unset);
  std::deque<std::int64_t> queue;
  for (std::int64_t lin = 0; lin < g.cell_count(); ++lin) {
    if (sources[static_cast<std::size_t>(lin)]) {
      steps[static_cast<std::size_t>(lin)] = 1;
      queue.push_back(lin);
    }
  }
  while (!queue.empty()) {
    const std::int64_t lin = queue.front();
    queue.pop_front();
    const CellIndex c = g.cell_at(lin);
    const std::int64_t s = steps[static_cast<std::size_t>(lin)];
    for (int a = 0; a < g.dim(); ++a) {
      for (int dir : {-1, 1}) {
        const CellIndex nb = c.shifted(a, dir);
        if (!vs.occupied(nb)) continue;
        const std::int64_t nl = g.linear(nb);
        if (steps[static_cast<std::size_t>(nl)] != unset) continue;
        if (d.is_crack(dir > 0 ? c : nb, a)) continue;
        steps[static_cast<std::size_t>(nl)] = s + 1;
        queue.push_back(nl);
      }
    }
  }
  std::vector<double> dist(static_cast<std::size_t>(g.cell_count()), 0.0);
  for (std::int64_t lin = 0; lin < g.cell_count(); ++lin) {
    if (!vs.occupied(lin)) continue;
    const std::int64_t s = steps[static_cast<std::size_t>(lin)];
    dist[static_cast<std::size_t>(lin)] =
        s == unset ? std::numeric_limits<double>::infinity() : static_cast<double>(s) * h;
  }
  return dist;
}

inline std::vector<double> crack_distance_field(const Domain& d) {
  return crack_distance_field(d, [](std::int64_t) { return true; });
}

inline VoxelSet threshold_distance(const GridGeometry& g, const std::vector<double>& dist, double delta) {
  std::vector<std::uint8_t> occ(dist.size(), 0);
  for (std::size_t i = 0; i < dist.size(); ++i) occ[i] = dist[i] > delta ? 1 : 0;
  return VoxelSet(g, std::move(occ));
}

inline VoxelSet erode(const Domain& d, double delta) {
  if (!(delta > 0.0)) throw Error(ErrorKind::InvalidGeometry, "erosion depth must be positive");
  return threshold_distance(d.geometry(), crack_distance_field(d), delta);
}

// ---------------------------------------------------------------------------
// Containment

/// closure(E) ∩ ∂Omega = ∅ for the union E of closed cells of `e`.
inline bool containment_check(const Domain& d, const VoxelSet& e) {
  const GridGeometry& g = d.geometry();
  if (!g.is_same(e.geometry())) throw Error(ErrorKind::GeometryMismatch, "set and domain live on different grids");
  const VoxelSet& vs = d.voxels();
  const auto offsets = detail::chebyshev_offsets(g.dim());
  for (std::int64_t lin = 0; lin < g.cell_count(); ++lin) {
    if (!e.occupied(lin)) continue;
    if (!vs.occupied(lin)) return false;
    const CellIndex c = g.cell_at(lin);
    for (const auto& o : offsets)
      if (!vs.occupied(detail::add(c, o))) return false;
  }
  for (const Face& f : d.cracks().faces()) {
    CellIndex lo = f.cell, hi = f.cell;
    hi[f.axis] += 1;
    for (int b = 0; b < g.dim(); ++b)
      if (b != f.axis) lo[b] -= 1, hi[b] += 1;
    CellIndex c;
    for (c[2] = lo[2]; c[2] <= hi[2]; ++c[2])
      for (c[1] = lo[1]; c[1] <= hi[1]; ++c[1])
        for (c[0] = lo[0]; c[0] <= hi[0]; ++c[0])
          if (e.occupied(c)) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Mollification

struct ScalarField {
  GridGeometry geometry;
  std::vector<double> values;
  double eps = 0.0;

  double at(const CellIndex& c) const { return values[static_cast<std::size_t>(geometry.linear(c))]; }
};

namespace detail {

/// Summed-volume table with one layer of zero padding per axis.
class BoxCounter {
 public:
  explicit BoxCounter(const VoxelSet& vs) : g_(vs.geometry()) {
    for (int a = 0; a < kMaxDim; ++a) n_[a] = g_.cells(a) + 1;
    table_.assign(static_cast<std::size_t>(n_[0] * n_[1] * n_[2]), 0);
    const std::int64_t zmax = g_.dim() == 3 ? g_.cells(2) : 1;
    for (std::int64_t z = 0; z < zmax; ++z)
      for (std::int64_t y = 0; y < g_.cells(1); ++y)
        for (std::int64_t x = 0; x < g_.cells(0); ++x) {
          const std::int64_t zz = g_.dim() == 3 ? z + 1 : 0;
          std::int64_t v = vs.occupied(CellIndex{{x, y, z}}) ? 1 : 0;
          v += at(x, y + 1, zz) + at(x + 1, y, zz) - at(x, y, zz);
          if (g_.dim() == 3)
            v += at(x + 1, y + 1, zz - 1) - at(x, y + 1, zz - 1) - at(x + 1, y, zz - 1) + at(x, y, zz - 1);
          table_[idx(x + 1, y + 1, zz)] = v;
        }
  }

  /// Occupied cells in the inclusive box [lo, hi], clamped to the grid.
  std::int64_t count(CellIndex lo, CellIndex hi) const {
    for (int a = 0; a < g_.dim(); ++a) {
      lo[a] = std::max<std::int64_t>(lo[a], 0);
      hi[a] = std::min<std::int64_t>(hi[a], g_.cells(a) - 1);
      if (hi[a] < lo[a]) return 0;
    }
    const std::int64_t x0 = lo[0], x1 = hi[0] + 1, y0 = lo[1], y1 = hi[1] + 1;
    if (g_.dim() == 2) return at(x1, y1, 0) - at(x0, y1, 0) - at(x1, y0, 0) + at(x0, y0, 0);
    const std::int64_t z0 = lo[2], z1 = hi[2] + 1;
    return at(x1, y1, z1) - at(x0, y1, z1) - at(x1, y0, z1) + at(x0, y0, z1) - at(x1, y1, z0) + at(x0, y1, z0) +
           at(x1, y0, z0) - at(x0, y0, z0);
  }

  /// Number of grid cells in the clamped box.
  std::int64_t volume(CellIndex lo, CellIndex hi) const {
    std::int64_t v = 1;
    for (int a = 0; a < g_.dim(); ++a) {
      const std::int64_t l = std::max<std::int64_t>(lo[a], 0), u = std::min<std::int64_t>(hi[a], g_.cells(a) - 1);
      v *= std::max<std::int64_t>(0, u - l + 1);
    }
    return v;
  }

 private:
  std::size_t idx(std::int64_t x, std::int64_t y, std::int64_t z) const {
    return static_cast<std::size_t>(x + n_[0] * (y + n_[1] * z));
  }
  std::int64_t at(std::int64_t x, std::int64_t y, std::int64_t z) const {
    if (z < 0) return 0;
    return table_[idx(x, y, z)];
  }

  GridGeometry g_;
  std::array<std::int64_t, kMaxDim> n_{};
  std::vector<std::int64_t> table_;
};

}  // namespace detail

/// u = chi_Omega * rho_eps with the bump exp(-1/(1-|z|^2)) sampled at cell
/// offsets and normalized to unit sum.  Cracks are invisible to it.
inline ScalarField mollify_field(const Domain& d, double eps) {
  const GridGeometry& g = d.geometry();
  const double h = g.spacing();
  if (!(eps >= 2.0 * h * (1.0 - 1e-12)))
    throw Error(ErrorKind::EpsTooSmall, "mollifier radius below two cells");
  const int n = g.dim();
  const auto R = static_cast<std::int64_t>(std::floor(eps / h));
  struct Tap {
    CellIndex offset;
    double weight;
  };
  std::vector<Tap> taps;
  double total = 0.0;
  const std::int64_t zr = n == 3 ? R : 0;
  for (std::int64_t dz = -zr; dz <= zr; ++dz)
    for (std::int64_t dy = -R; dy <= R; ++dy)
      for (std::int64_t dx = -R; dx <= R; ++dx) {
        const double s = static_cast<double>(dx * dx + dy * dy + dz * dz) * h * h / (eps * eps);
        if (s >= 1.0) continue;
        const double w = std::exp(-1.0 / (1.0 - s));
        taps.push_back({CellIndex{{dx, dy, dz}}, w});
        total += w;
      }
  for (auto& t : taps) t.weight /= total;

  const VoxelSet& vs = d.voxels();
  const detail::BoxCounter boxes(vs);
  ScalarField u{g, std::vector<double>(static_cast<std::size_t>(g.cell_count()), 0.0), eps};
  const CellIndex reach{{R, R, zr}};
  g.for_each_cell([&](std::int64_t lin, const CellIndex& c) {
    CellIndex lo, hi;
    for (int a = 0; a < kMaxDim; ++a) lo[a] = c[a] - reach[a], hi[a] = c[a] + reach[a];
    const std::int64_t occ = boxes.count(lo, hi);
    if (occ == 0) return;
    // Cells beyond the grid count as empty, so a full count needs the whole box.
    if (occ == (2 * R + 1) * (2 * R + 1) * (2 * zr + 1)) {
      u.values[static_cast<std::size_t>(lin)] = 1.0;
      return;
    }
    double acc = 0.0;
    for (const auto& t : taps)
      if (vs.occupied(detail::add(c, t.offset))) acc += t.weight;
    u.values[static_cast<std::size_t>(lin)] = std::clamp(acc, 0.0, 1.0);
  });
  return u;
}

inline VoxelSet superlevel(const ScalarField& u, double t) {
  if (!(t > 0.0 && t < 1.0)) throw Error(ErrorKind::InvalidGeometry, "superlevel threshold must lie in (0, 1)");
  std::vector<std::uint8_t> occ(u.values.size(), 0);
  for (std::size_t i = 0; i < occ.size(); ++i) occ[i] = u.values[i] > t ? 1 : 0;
  return VoxelSet(u.geometry, std::move(occ));
}

// ---------------------------------------------------------------------------
// Boundary density condition

struct BoundarySampling {
  bool face_centers = true;
  bool singular_points = true;  // vertices (2D) / edge midpoints (3D) of non-flat boundary
  bool crack_centers = true;
  std::int64_t stride = 1;      // keep every stride-th sample of each kind
};

struct DensityViolation {
  Point x{0, 0, 0};
  double r = 0.0;
  double density = 0.0;
};

struct DensityConditionReport {
  std::vector<double> radii;
  std::vector<DensityViolation> violations;
  std::int64_t samples = 0;
  double max_density = 0.0;
  Point argmax{0, 0, 0};
  /// Uniform condition: no sample reaches density >= 1 - delta at any radius.
  bool uniform_holds = true;
  /// Mass of boundary faces (reduced and crack) whose center reaches
  /// density >= 1 - delta at the finest radius, and the total boundary mass.
  double violating_face_mass = 0.0;
  double boundary_mass = 0.0;
};

inline DensityConditionReport density_condition_check(const Domain& d, double delta, double r0,
                                                      const BoundarySampling& sampling = {}) {
  const GridGeometry& g = d.geometry();
  const double h = g.spacing();
  if (!(delta > 0.0 && delta < 1.0)) throw Error(ErrorKind::InvalidGeometry, "delta must lie in (0, 1)");
  if (!(r0 > 2.0 * h)) throw Error(ErrorKind::GeometryTooCoarse, "r0 must exceed two cells");
  DensityConditionReport rep;
  for (double r = r0; r >= 2.0 * h * (1.0 - 1e-12); r *= 0.5) rep.radii.push_back(r);

  const auto bd = boundary_decomposition(d);
  const double face_area = g.face_area();
  rep.boundary_mass = bd.reduced_mass + bd.crack_mass;
  const std::int64_t stride = std::max<std::int64_t>(1, sampling.stride);

  auto face_center = [&](const Face& f) {
    Point p = g.cell_center(f.cell);
    p[f.axis] += 0.5 * h;
    return p;
  };
  auto probe = [&](const Point& x, bool is_face) {
    ++rep.samples;
    bool finest_violates = false;
    for (double r : rep.radii) {
      // Keep the ball inside the grid; margins are at least one cell.
      bool inside = true;
      for (int a = 0; a < g.dim(); ++a) inside = inside && x[a] - r >= g.lo(a) && x[a] + r <= g.hi(a);
      if (!inside) continue;
      const double rho = density(d.voxels(), x, r);
      if (rho > rep.max_density) rep.max_density = rho, rep.argmax = x;
      if (rho >= 1.0 - delta) {
        rep.violations.push_back({x, r, rho});
        rep.uniform_holds = false;
        if (r == rep.radii.back()) finest_violates = true;
      }
    }
    if (is_face && finest_violates) rep.violating_face_mass += face_area;
  };

  if (sampling.face_centers)
    for (std::size_t i = 0; i < bd.reduced_faces.size(); i += static_cast<std::size_t>(stride))
      probe(face_center(bd.reduced_faces[i]), true);
  if (sampling.crack_centers)
    for (std::size_t i = 0; i < bd.crack_faces.size(); i += static_cast<std::size_t>(stride))
      probe(face_center(bd.crack_faces[i]), true);
  if (sampling.singular_points)
    for (std::size_t i = 0; i < bd.skeleton.singular_points.size(); i += static_cast<std::size_t>(stride))
      probe(bd.skeleton.singular_points[i], false);
  // Subsampled face mass scales back to the full face count.
  rep.violating_face_mass *= static_cast<double>(stride);
  return rep;
}

// ---------------------------------------------------------------------------
// Approximation sequences

struct ApproxStep {
  double param = 0.0;      // delta for erosion, eps for mollification
  double threshold = 0.0;  // t for mollification, unused for erosion
  VoxelSet set;
  bool compactly_contained = false;
  bool conforming = true;  // false below the two-cell validity floor
  double volume = 0.0;
  double volume_gap = 0.0;
  double perimeter = 0.0;
};

struct ApproxSequence {
  std::string method;  // "erosion" or "mollify"
  Domain base;
  std::vector<ApproxStep> steps;

  double relative_perimeter(std::size_t k, const Region& w) const {
    return perimeter_lab::relative_perimeter(steps.at(k).set, w);
  }
};

inline ApproxStep make_step(const Domain& d, VoxelSet set, double param, double threshold, bool conforming) {
  ApproxStep s;
  s.param = param;
  s.threshold = threshold;
  s.conforming = conforming;
  const double cell = d.geometry().cell_volume();
  s.volume = static_cast<double>(set.count()) * cell;
  std::int64_t missing = 0;
  for (std::int64_t lin = 0; lin < d.geometry().cell_count(); ++lin)
    if (d.voxels().occupied(lin) && !set.occupied(lin)) ++missing;
  s.volume_gap = static_cast<double>(missing) * cell;
  s.perimeter = perimeter(set);
  s.compactly_contained = !set.empty() && containment_check(d, set);
  s.set = std::move(set);
  return s;
}

inline ApproxSequence erosion_sequence(const Domain& d, const std::vector<double>& deltas) {
  for (std::size_t i = 1; i < deltas.size(); ++i)
    if (!(deltas[i] < deltas[i - 1])) throw Error(ErrorKind::InvalidGeometry, "erosion depths must be descending");
  ApproxSequence seq{"erosion", d, {}};
  const auto dist = crack_distance_field(d);
  const double h = d.geometry().spacing();
  for (double delta : deltas) {
    if (!(delta > 0.0)) throw Error(ErrorKind::InvalidGeometry, "erosion depth must be positive");
    seq.steps.push_back(make_step(d, threshold_distance(d.geometry(), dist, delta), delta, 0.0, delta > 2.0 * h));
  }
  return seq;
}

struct SuperlevelSearch {
  bool found = false;
  double eps = 0.0;
  double t = 0.0;
  ApproxStep best;
  /// Every (eps, t) tried with its containment verdict.
  std::vector<ApproxStep> tried;
};

/// Scans the (eps, t) grid for compactly contained superlevel sets and keeps
/// the one with the smallest volume gap.
inline SuperlevelSearch search_contained_superlevel(const Domain& d, const std::vector<double>& eps_values,
                                                    const std::vector<double>& t_values) {
  SuperlevelSearch out;
  for (double eps : eps_values) {
    const ScalarField u = mollify_field(d, eps);
    for (double t : t_values) {
      ApproxStep s = make_step(d, superlevel(u, t), eps, t, true);
      if (s.compactly_contained && (!out.found || s.volume_gap < out.best.volume_gap)) {
        out.found = true;
        out.eps = eps;
        out.t = t;
        out.best = s;
      }
      s.set = VoxelSet();
      out.tried.push_back(std::move(s));
    }
  }
  return out;
}

/// One mollified step per (eps, t) pair, in the given order.
inline ApproxSequence mollify_sequence(const Domain& d, const std::vector<std::pair<double, double>>& eps_t) {
  ApproxSequence seq{"mollify", d, {}};
  for (auto [eps, t] : eps_t) seq.steps.push_back(make_step(d, superlevel(mollify_field(d, eps), t), eps, t, true));
  return seq;
}

/// Exterior approximations F ⊇ closure(Omega): erode the complement of Omega
/// inside the box of cells at least `box_margin` from the grid shell, with
/// only Omega's cells acting as obstacles, and take F = box \ eroded.  Steps
/// record |F \ Omega| as volume_gap and "Omega ⋐ F" as compactly_contained.
inline ApproxSequence exterior_sequence(const Domain& omega, std::int64_t box_margin, const std::vector<double>& deltas) {
  const GridGeometry& g = omega.geometry();
  if (box_margin < 1) throw Error(ErrorKind::MarginViolation, "complement box needs a margin of at least one cell");
  g.for_each_cell([&](std::int64_t lin, const CellIndex& c) {
    if (!omega.voxels().occupied(lin)) return;
    for (int a = 0; a < g.dim(); ++a)
      if (c[a] < box_margin + 1 || c[a] >= g.cells(a) - box_margin - 1)
        throw Error(ErrorKind::MarginViolation, "domain does not fit inside the complement box");
  });
  for (std::size_t i = 1; i < deltas.size(); ++i)
    if (!(deltas[i] < deltas[i - 1])) throw Error(ErrorKind::InvalidGeometry, "erosion depths must be descending");
  const Domain comp = complement_within_box(omega, box_margin);
  const auto dist = crack_distance_field(comp, [&](std::int64_t lin) { return omega.voxels().occupied(lin); });
  const double h = g.spacing();
  const double cell = g.cell_volume();
  ApproxSequence seq{"exterior", omega, {}};
  for (double delta : deltas) {
    if (!(delta > 0.0)) throw Error(ErrorKind::InvalidGeometry, "erosion depth must be positive");
    const VoxelSet inner = threshold_distance(g, dist, delta);
    std::vector<std::uint8_t> occ(static_cast<std::size_t>(g.cell_count()), 0);
    std::int64_t extra = 0;
    for (std::int64_t lin = 0; lin < g.cell_count(); ++lin) {
      const bool in_f = omega.voxels().occupied(lin) || (comp.voxels().occupied(lin) && !inner.occupied(lin));
      occ[static_cast<std::size_t>(lin)] = in_f ? 1 : 0;
      if (in_f && !omega.voxels().occupied(lin)) ++extra;
    }
    ApproxStep s;
    s.param = delta;
    s.conforming = delta > 2.0 * h;
    s.set = VoxelSet(g, std::move(occ));
    s.volume = static_cast<double>(s.set.count()) * cell;
    s.volume_gap = static_cast<double>(extra) * cell;
    s.perimeter = perimeter(s.set);
    const Domain f = make_domain(g, s.set, CrackSet{});
    s.compactly_contained = containment_check(f, omega.voxels());
    seq.steps.push_back(std::move(s));
  }
  return seq;
}

// ---------------------------------------------------------------------------
// Serialization

inline nlohmann::json to_json(const ApproxSequence& seq) {
  const MeasureReport m = measure(seq.base);
  nlohmann::json j;
  j["method"] = seq.method;
  j["base"] = {{"volume", m.volume}, {"perimeter", m.perimeter}, {"crack_mass", m.crack_mass},
               {"spacing", seq.base.geometry().spacing()}, {"dim", seq.base.dim()}};
  auto steps = nlohmann::json::array();
  for (std::size_t k = 0; k < seq.steps.size(); ++k) {
    const auto& s = seq.steps[k];
    nlohmann::json e{{"k", k},
                     {"param", s.param},
                     {"volume", s.volume},
                     {"volume_gap", s.volume_gap},
                     {"perimeter", s.perimeter},
                     {"contained", s.compactly_contained},
                     {"conforming", s.conforming}};
    if (seq.method == "mollify") e["t"] = s.threshold;
    steps.push_back(std::move(e));
  }
  j["steps"] = std::move(steps);
  return j;
}

inline std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline const char* approx_csv_header() { return "k,param,volume,volume_gap,perimeter,contained"; }

inline std::vector<std::string> approx_csv_rows(const ApproxSequence& seq) {
  std::vector<std::string> rows;
  for (std::size_t k = 0; k < seq.steps.size(); ++k) {
    const auto& s = seq.steps[k];
    std::ostringstream os;
    os << k << ',' << format_number(s.param) << ',' << format_number(s.volume) << ',' << format_number(s.volume_gap)
       << ',' << format_number(s.perimeter) << ',' << (s.compactly_contained ? "true" : "false");
    rows.push_back(os.str());
  }
  return rows;
}

/// Self-contained sequence file: base domain plus every step's set.
inline nlohmann::json sequence_file_json(const ApproxSequence& seq) {
  nlohmann::json j = to_json(seq);
  j["domain"] = domain_to_json(seq.base);
  for (std::size_t k = 0; k < seq.steps.size(); ++k) j["steps"][k]["occupancy_rle"] = occupancy_rle(seq.steps[k].set);
  return j;
}

/// Rebuilds a sequence from sequence_file_json output, recomputing every
/// measured quantity.
inline ApproxSequence sequence_from_json(const nlohmann::json& j) {
  try {
    ApproxSequence seq;
    seq.method = j.at("method").get<std::string>();
    seq.base = domain_from_json(j.at("domain"));
    const GridGeometry& g = seq.base.geometry();
    for (const auto& s : j.at("steps")) {
      const double param = s.at("param").get<double>();
      const double t = s.contains("t") ? s.at("t").get<double>() : 0.0;
      const bool conforming = s.contains("conforming") ? s.at("conforming").get<bool>() : true;
      VoxelSet set = voxels_from_rle(g, s.at("occupancy_rle"));
      seq.steps.push_back(make_step(seq.base, std::move(set), param, t, conforming));
    }
    return seq;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ParseError, e.what());
  }
}

}  // namespace perimeter_lab
