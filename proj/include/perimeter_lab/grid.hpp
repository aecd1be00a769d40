#pragma once

// Voxel-with-crack domains on a regular grid.
//
// A Domain is the open set  int(union of occupied closed cells) \ (union of
// closed crack faces).  All of its geometry is integer indexed; physical
// coordinates only enter through GridGeometry::spacing and ::origin.

#include <algorithm>
#include <array>
#include <cmath>
#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "perimeter_lab/error.hpp"

namespace perimeter_lab {

inline constexpr int kMaxDim = 3;

using Point = std::array<double, kMaxDim>;

struct CellIndex {
  std::array<std::int64_t, kMaxDim> coord{0, 0, 0};

  std::int64_t& operator[](int axis) { return coord[static_cast<std::size_t>(axis)]; }
  std::int64_t operator[](int axis) const { return coord[static_cast<std::size_t>(axis)]; }

  CellIndex shifted(int axis, std::int64_t by) const {
    CellIndex c = *this;
    c[axis] += by;
    return c;
  }

  friend auto operator<=>(const CellIndex&, const CellIndex&) = default;
};

enum class Side : std::uint8_t { negative = 0, positive = 1 };

/// Interface between two face-adjacent cells.  The canonical form names the
/// lower-adjacent cell with side = positive.
struct Face {
  CellIndex cell;
  int axis = 0;
  Side side = Side::positive;

  Face canonical() const {
    if (side == Side::positive) return *this;
    return Face{cell.shifted(axis, -1), axis, Side::positive};
  }

  friend auto operator<=>(const Face&, const Face&) = default;
};

class GridGeometry {
 public:
  GridGeometry() = default;

  GridGeometry(int dim, std::array<std::int64_t, kMaxDim> cells, double spacing, Point origin)
      : dim_(dim), cells_(cells), spacing_(spacing), origin_(origin) {
    if (dim != 2 && dim != 3) throw Error(ErrorKind::InvalidGeometry, "dim must be 2 or 3");
    if (!(spacing > 0.0) || !std::isfinite(spacing))
      throw Error(ErrorKind::InvalidGeometry, "spacing must be positive");
    for (int a = 0; a < kMaxDim; ++a) {
      if (a < dim) {
        if (cells_[a] < 1) throw Error(ErrorKind::InvalidGeometry, "cells_per_axis must be >= 1");
      } else {
        cells_[a] = 1;
        origin_[a] = 0.0;
      }
    }
  }

  /// Grid whose cells tile [-half_extent, half_extent]^dim with `n_across`
  /// cells per axis, padded by `margin` extra cells on every side.
  static GridGeometry centered(int dim, std::int64_t n_across, double half_extent = 1.0,
                               std::int64_t margin = 1) {
    if (n_across < 1) throw Error(ErrorKind::InvalidGeometry, "n_across must be >= 1");
    const double h = 2.0 * half_extent / static_cast<double>(n_across);
    std::array<std::int64_t, kMaxDim> cells{1, 1, 1};
    Point origin{0, 0, 0};
    for (int a = 0; a < dim; ++a) {
      cells[a] = n_across + 2 * margin;
      origin[a] = -half_extent - static_cast<double>(margin) * h;
    }
    return GridGeometry(dim, cells, h, origin);
  }

  int dim() const { return dim_; }
  std::int64_t cells(int axis) const { return cells_[static_cast<std::size_t>(axis)]; }
  const std::array<std::int64_t, kMaxDim>& cells() const { return cells_; }
  double spacing() const { return spacing_; }
  double origin(int axis) const { return origin_[static_cast<std::size_t>(axis)]; }
  const Point& origin() const { return origin_; }

  std::int64_t cell_count() const { return cells_[0] * cells_[1] * cells_[2]; }
  double extent(int axis) const { return static_cast<double>(cells(axis)) * spacing_; }
  double lo(int axis) const { return origin(axis); }
  double hi(int axis) const { return origin(axis) + extent(axis); }

  double face_area() const { return std::pow(spacing_, dim_ - 1); }
  double cell_volume() const { return std::pow(spacing_, dim_); }

  bool contains(const CellIndex& c) const {
    for (int a = 0; a < dim_; ++a)
      if (c[a] < 0 || c[a] >= cells(a)) return false;
    for (int a = dim_; a < kMaxDim; ++a)
      if (c[a] != 0) return false;
    return true;
  }

  /// x-fastest linear order: lin = c0 + n0 * (c1 + n1 * c2).
  std::int64_t linear(const CellIndex& c) const { return c[0] + cells_[0] * (c[1] + cells_[1] * c[2]); }

  CellIndex cell_at(std::int64_t lin) const {
    CellIndex c;
    c[0] = lin % cells_[0];
    lin /= cells_[0];
    c[1] = lin % cells_[1];
    c[2] = lin / cells_[1];
    return c;
  }

  double plane(int axis, std::int64_t k) const { return origin(axis) + static_cast<double>(k) * spacing_; }

  Point cell_center(const CellIndex& c) const {
    Point p{0, 0, 0};
    for (int a = 0; a < dim_; ++a) p[a] = plane(a, c[a]) + 0.5 * spacing_;
    return p;
  }

  /// Continuous grid coordinate of x along `axis` (cell k spans [k, k+1)).
  double grid_coord(int axis, double x) const { return (x - origin(axis)) / spacing_; }

  bool is_same(const GridGeometry& o) const {
    return dim_ == o.dim_ && cells_ == o.cells_ && spacing_ == o.spacing_ && origin_ == o.origin_;
  }

  bool on_outer_shell(const CellIndex& c) const {
    for (int a = 0; a < dim_; ++a)
      if (c[a] == 0 || c[a] == cells(a) - 1) return true;
    return false;
  }

  template <typename Fn>
  void for_each_cell(Fn&& fn) const {
    const std::int64_t n = cell_count();
    for (std::int64_t lin = 0; lin < n; ++lin) fn(lin, cell_at(lin));
  }

 private:
  int dim_ = 2;
  std::array<std::int64_t, kMaxDim> cells_{1, 1, 1};
  double spacing_ = 1.0;
  Point origin_{0, 0, 0};
};

/// Dense occupancy over every cell of a grid.  Immutable; carries per-row
/// prefix counts along axis 0 so box counts along a row are O(1).
class VoxelSet {
 public:
  VoxelSet() = default;

  explicit VoxelSet(GridGeometry g) : VoxelSet(g, std::vector<std::uint8_t>(static_cast<std::size_t>(g.cell_count()), 0)) {}

  VoxelSet(GridGeometry g, std::vector<std::uint8_t> occupancy) : geom_(std::move(g)), occ_(std::move(occupancy)) {
    if (static_cast<std::int64_t>(occ_.size()) != geom_.cell_count())
      throw Error(ErrorKind::InvalidGeometry, "occupancy length does not match cell count");
    for (auto& v : occ_) v = v ? 1 : 0;
    build_prefix();
  }

  const GridGeometry& geometry() const { return geom_; }
  std::span<const std::uint8_t> data() const { return occ_; }

  bool occupied(std::int64_t lin) const { return occ_[static_cast<std::size_t>(lin)] != 0; }
  bool occupied(const CellIndex& c) const { return geom_.contains(c) && occupied(geom_.linear(c)); }

  std::int64_t count() const { return total_; }
  bool empty() const { return total_ == 0; }

  /// Occupied cells with axis-0 coordinate in [x0, x1) in the row through `row_cell`.
  std::int64_t row_count(const CellIndex& row_cell, std::int64_t x0, std::int64_t x1) const {
    x0 = std::max<std::int64_t>(x0, 0);
    x1 = std::min<std::int64_t>(x1, geom_.cells(0));
    if (x1 <= x0) return 0;
    if (row_cell[1] < 0 || row_cell[1] >= geom_.cells(1) || row_cell[2] < 0 || row_cell[2] >= geom_.cells(2))
      return 0;
    const std::int64_t row = row_cell[1] + geom_.cells(1) * row_cell[2];
    const std::size_t base = static_cast<std::size_t>(row * (geom_.cells(0) + 1));
    return static_cast<std::int64_t>(prefix_[base + static_cast<std::size_t>(x1)]) -
           static_cast<std::int64_t>(prefix_[base + static_cast<std::size_t>(x0)]);
  }

  bool subset_of(const VoxelSet& other) const {
    for (std::size_t i = 0; i < occ_.size(); ++i)
      if (occ_[i] && !other.occ_[i]) return false;
    return true;
  }

  friend bool operator==(const VoxelSet& a, const VoxelSet& b) {
    return a.geom_.is_same(b.geom_) && a.occ_ == b.occ_;
  }

 private:
  void build_prefix() {
    const std::int64_t n0 = geom_.cells(0);
    const std::int64_t rows = geom_.cells(1) * geom_.cells(2);
    prefix_.assign(static_cast<std::size_t>(rows * (n0 + 1)), 0);
    total_ = 0;
    for (std::int64_t r = 0; r < rows; ++r) {
      std::uint32_t acc = 0;
      const std::size_t base = static_cast<std::size_t>(r * (n0 + 1));
      for (std::int64_t x = 0; x < n0; ++x) {
        acc += occ_[static_cast<std::size_t>(r * n0 + x)];
        prefix_[base + static_cast<std::size_t>(x + 1)] = acc;
      }
      total_ += acc;
    }
  }

  GridGeometry geom_;
  std::vector<std::uint8_t> occ_;
  std::vector<std::uint32_t> prefix_;
  std::int64_t total_ = 0;
};

/// Finite set of canonical faces, sorted and duplicate free.
class CrackSet {
 public:
  CrackSet() = default;
  explicit CrackSet(std::vector<Face> faces) : faces_(std::move(faces)) {
    for (auto& f : faces_) f = f.canonical();
    std::sort(faces_.begin(), faces_.end());
    faces_.erase(std::unique(faces_.begin(), faces_.end()), faces_.end());
  }

  const std::vector<Face>& faces() const { return faces_; }
  std::size_t size() const { return faces_.size(); }
  bool empty() const { return faces_.empty(); }
  bool contains(const Face& f) const { return std::binary_search(faces_.begin(), faces_.end(), f.canonical()); }

  friend bool operator==(const CrackSet&, const CrackSet&) = default;

 private:
  std::vector<Face> faces_;
};

class Domain {
 public:
  Domain() = default;

  const GridGeometry& geometry() const { return voxels_.geometry(); }
  const VoxelSet& voxels() const { return voxels_; }
  const CrackSet& cracks() const { return cracks_; }
  int dim() const { return geometry().dim(); }

  /// Is the face between `lower` and lower + e_axis a crack face?
  bool is_crack(const CellIndex& lower, int axis) const {
    if (cracks_.empty() || !geometry().contains(lower)) return false;
    return crack_mask_[static_cast<std::size_t>(axis * geometry().cell_count() + geometry().linear(lower))] != 0;
  }

  /// Crack check on the canonical face keyed by its lower cell, allowing a
  /// lower cell just outside the grid (never a crack).
  bool is_crack(const Face& f) const {
    const Face c = f.canonical();
    return is_crack(c.cell, c.axis);
  }

  Domain without_cracks() const {
    Domain d;
    d.voxels_ = voxels_;
    return d;
  }

  friend bool operator==(const Domain& a, const Domain& b) {
    return a.voxels_ == b.voxels_ && a.cracks_ == b.cracks_;
  }

  friend Domain make_domain(const GridGeometry& geometry, VoxelSet voxels, CrackSet cracks);

 private:
  VoxelSet voxels_;
  CrackSet cracks_;
  std::vector<std::uint8_t> crack_mask_;
};

/// Validates the interior-crack and one-cell-margin invariants.
inline Domain make_domain(const GridGeometry& geometry, VoxelSet voxels, CrackSet cracks) {
  if (!geometry.is_same(voxels.geometry()))
    throw Error(ErrorKind::GeometryMismatch, "voxel set geometry differs from domain geometry");
  const auto data = voxels.data();
  for (std::int64_t lin = 0; lin < geometry.cell_count(); ++lin) {
    if (!data[static_cast<std::size_t>(lin)]) continue;
    const CellIndex c = geometry.cell_at(lin);
    if (geometry.on_outer_shell(c))
      throw Error(ErrorKind::MarginViolation, "occupied cell on the grid's outer shell");
  }
  Domain d;
  d.voxels_ = std::move(voxels);
  if (!cracks.empty()) {
    d.crack_mask_.assign(static_cast<std::size_t>(geometry.dim() * geometry.cell_count()), 0);
    for (const Face& f : cracks.faces()) {
      if (f.axis < 0 || f.axis >= geometry.dim())
        throw Error(ErrorKind::InvalidGeometry, "crack face axis out of range");
      const CellIndex upper = f.cell.shifted(f.axis, 1);
      if (!d.voxels_.occupied(f.cell) || !d.voxels_.occupied(upper))
        throw Error(ErrorKind::CrackNotInterior, "crack face has an unoccupied neighbour");
      d.crack_mask_[static_cast<std::size_t>(f.axis * geometry.cell_count() + geometry.linear(f.cell))] = 1;
    }
  }
  d.cracks_ = std::move(cracks);
  return d;
}

/// Same set on a grid refined by `factor` (cracks subdivided accordingly).
inline Domain refine_domain(const Domain& d, int factor) {
  if (factor < 1) throw Error(ErrorKind::InvalidGeometry, "refine factor must be >= 1");
  const GridGeometry& g = d.geometry();
  std::array<std::int64_t, kMaxDim> cells{1, 1, 1};
  for (int a = 0; a < g.dim(); ++a) cells[a] = g.cells(a) * factor;
  const GridGeometry fine(g.dim(), cells, g.spacing() / factor, g.origin());
  std::vector<std::uint8_t> occ(static_cast<std::size_t>(fine.cell_count()), 0);
  for (std::int64_t lin = 0; lin < fine.cell_count(); ++lin) {
    CellIndex c = fine.cell_at(lin);
    for (int a = 0; a < g.dim(); ++a) c[a] /= factor;
    occ[static_cast<std::size_t>(lin)] = d.voxels().occupied(c) ? 1 : 0;
  }
  std::vector<Face> faces;
  const std::int64_t sub = g.dim() == 2 ? factor : static_cast<std::int64_t>(factor) * factor;
  for (const Face& f : d.cracks().faces()) {
    for (std::int64_t s = 0; s < sub; ++s) {
      CellIndex c;
      std::int64_t rem = s;
      for (int a = 0; a < g.dim(); ++a) {
        if (a == f.axis) {
          c[a] = f.cell[a] * factor + factor - 1;
        } else {
          c[a] = f.cell[a] * factor + rem % factor;
          rem /= factor;
        }
      }
      faces.push_back(Face{c, f.axis, Side::positive});
    }
  }
  return make_domain(fine, VoxelSet(fine, std::move(occ)), CrackSet(std::move(faces)));
}

/// Box-minus-domain: the box is every cell at least `margin_cells` away from
/// the grid's outer shell.  Cracks of the input do not transfer.
inline Domain complement_within_box(const Domain& d, std::int64_t margin_cells) {
  const GridGeometry& g = d.geometry();
  std::vector<std::uint8_t> occ(static_cast<std::size_t>(g.cell_count()), 0);
  for (std::int64_t lin = 0; lin < g.cell_count(); ++lin) {
    const CellIndex c = g.cell_at(lin);
    bool in_box = true;
    for (int a = 0; a < g.dim(); ++a)
      if (c[a] < margin_cells || c[a] >= g.cells(a) - margin_cells) in_box = false;
    occ[static_cast<std::size_t>(lin)] = (in_box && !d.voxels().occupied(lin)) ? 1 : 0;
  }
  return make_domain(g, VoxelSet(g, std::move(occ)), CrackSet{});
}

}  // namespace perimeter_lab
