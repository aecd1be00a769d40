#pragma once

// Named example geometries.  A cell is occupied iff its center lies in the
// continuum shape; crack faces are placed on grid planes.

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "perimeter_lab/grid.hpp"

namespace perimeter_lab {

struct GalleryParams {
  std::map<std::string, double> values;
  std::optional<std::uint64_t> seed;

  double get(const std::string& key, double fallback) const {
    auto it = values.find(key);
    return it == values.end() ? fallback : it->second;
  }
};

inline const std::vector<std::string>& gallery_names() {
  static const std::vector<std::string> names{"square", "cracked_rectangle", "disk", "cusp_wedge",
                                              "comb", "cantor_crack", "random_blobs"};
  return names;
}

/// splitmix64: the generator behind random_blobs, fixed so output is
/// identical across standard libraries.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }
  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::int64_t below(std::int64_t n) { return static_cast<std::int64_t>(next() % static_cast<std::uint64_t>(n)); }

 private:
  std::uint64_t state_;
};

namespace detail {

template <typename Pred>
std::vector<std::uint8_t> rasterize(const GridGeometry& g, Pred&& inside) {
  std::vector<std::uint8_t> occ(static_cast<std::size_t>(g.cell_count()), 0);
  for (std::int64_t lin = 0; lin < g.cell_count(); ++lin)
    occ[static_cast<std::size_t>(lin)] = inside(g.cell_center(g.cell_at(lin))) ? 1 : 0;
  return occ;
}

/// Grid-plane index along `axis` at physical coordinate x; throws unless x
/// lies on a grid plane.
inline std::int64_t plane_index(const GridGeometry& g, int axis, double x, const char* what) {
  const double k = g.grid_coord(axis, x);
  const double r = std::round(k);
  if (std::abs(k - r) > 1e-9)
    throw Error(ErrorKind::GeometryTooCoarse, std::string(what) + " does not fall on a grid plane");
  return static_cast<std::int64_t>(r);
}

/// Crack faces with normal `axis` on plane index k, for lower cells
/// satisfying `want`, keeping only faces with both neighbours occupied.
template <typename Want>
std::vector<Face> plane_cracks(const GridGeometry& g, const std::vector<std::uint8_t>& occ, int axis,
                               std::int64_t k, Want&& want) {
  std::vector<Face> faces;
  if (k < 1 || k >= g.cells(axis)) return faces;
  for (std::int64_t lin = 0; lin < g.cell_count(); ++lin) {
    CellIndex c = g.cell_at(lin);
    if (c[axis] != k - 1) continue;
    const CellIndex up = c.shifted(axis, 1);
    if (!occ[static_cast<std::size_t>(lin)] || !occ[static_cast<std::size_t>(g.linear(up))]) continue;
    if (!want(g.cell_center(c))) continue;
    faces.push_back(Face{c, axis, Side::positive});
  }
  return faces;
}

inline bool in_box(const GridGeometry& g, const Point& p, double half) {
  for (int a = 0; a < g.dim(); ++a)
    if (std::abs(p[a]) >= half) return false;
  return true;
}

/// Fat Cantor set on [-span/2, span/2]: `levels` rounds each keeping the two
/// outer pieces of every interval, sized so the total length is `length`.
inline std::vector<std::pair<double, double>> fat_cantor(double span, double length, int levels) {
  std::vector<std::pair<double, double>> iv{{-0.5 * span, 0.5 * span}};
  const double keep = std::pow(length / span, 1.0 / std::max(levels, 1));
  for (int l = 0; l < levels; ++l) {
    std::vector<std::pair<double, double>> next;
    for (auto [a, b] : iv) {
      const double piece = 0.5 * keep * (b - a);
      next.push_back({a, a + piece});
      next.push_back({b - piece, b});
    }
    iv = std::move(next);
  }
  if (levels <= 0) iv = {{-0.5 * length, 0.5 * length}};
  return iv;
}

}  // namespace detail

inline Domain gallery(const std::string& name, const GalleryParams& params, const GridGeometry& g) {
  const int n = g.dim();
  const int last = n - 1;
  const double h = g.spacing();
  const double half = params.get("half", 1.0);

  if (name == "square") {
    auto occ = detail::rasterize(g, [&](const Point& p) { return detail::in_box(g, p, half); });
    return make_domain(g, VoxelSet(g, std::move(occ)), CrackSet{});
  }

  if (name == "cracked_rectangle") {
    if (2.0 * half < 2.0 * h) throw Error(ErrorKind::GeometryTooCoarse, "rectangle thinner than two cells");
    auto occ = detail::rasterize(g, [&](const Point& p) { return detail::in_box(g, p, half); });
    const std::int64_t k = detail::plane_index(g, last, 0.0, "crack plane");
    auto faces = detail::plane_cracks(g, occ, last, k, [](const Point&) { return true; });
    return make_domain(g, VoxelSet(g, std::move(occ)), CrackSet(std::move(faces)));
  }

  if (name == "disk") {
    const double radius = params.get("radius", 1.0);
    if (radius < h) throw Error(ErrorKind::GeometryTooCoarse, "disk radius below one cell");
    auto occ = detail::rasterize(g, [&](const Point& p) {
      double s = 0;
      for (int a = 0; a < n; ++a) s += p[a] * p[a];
      return s < radius * radius;
    });
    return make_domain(g, VoxelSet(g, std::move(occ)), CrackSet{});
  }

  if (name == "cusp_wedge") {
    // Box with an inward cusp entering from the +x side along the x axis:
    // a one-cell spike chain just above the axis plus a quadratic channel of
    // half width aperture * ((x - tip) / depth)^2.
    const double depth = params.get("depth", 0.5);
    const double aperture = params.get("aperture", 0.25);
    if (depth < h) throw Error(ErrorKind::GeometryTooCoarse, "cusp depth below one cell");
    const double tip = half - depth;
    const std::int64_t k0 = detail::plane_index(g, 1, 0.0, "cusp axis");
    auto occ = detail::rasterize(g, [&](const Point& p) {
      if (!detail::in_box(g, p, half)) return false;
      if (p[0] <= tip) return true;
      const double s = (p[0] - tip) / depth;
      const double w = aperture * s * s;
      double rr = 0;
      for (int a = 1; a < n; ++a) rr = std::max(rr, std::abs(p[a]));
      if (rr < w) return false;
      bool chain = true;
      for (int a = 1; a < n; ++a) chain = chain && (std::abs(p[a] - (g.plane(a, k0) + 0.5 * h)) < 0.25 * h);
      return !chain;
    });
    return make_domain(g, VoxelSet(g, std::move(occ)), CrackSet{});
  }

  if (name == "comb") {
    const int teeth = static_cast<int>(params.get("teeth", 8));
    const double base = params.get("base", 0.25);
    if (teeth < 1) throw Error(ErrorKind::InvalidGeometry, "comb needs at least one tooth");
    const double slot = 2.0 * half / (2.0 * teeth - 1.0);
    if (slot < h || 2.0 * half * base < h) throw Error(ErrorKind::GeometryTooCoarse, "comb tooth below one cell");
    auto occ = detail::rasterize(g, [&](const Point& p) {
      if (!detail::in_box(g, p, half)) return false;
      if (p[1] < -half + 2.0 * half * base) return true;
      const auto s = static_cast<std::int64_t>(std::floor((p[0] + half) / slot));
      return s % 2 == 0;
    });
    return make_domain(g, VoxelSet(g, std::move(occ)), CrackSet{});
  }

  if (name == "cantor_crack") {
    const double mass = params.get("mass", 1.0);
    const int levels = static_cast<int>(params.get("levels", 2));
    const double span = params.get("span", 1.5 * half);
    double tangential = 1.0;
    for (int a = 1; a < last; ++a) tangential *= 2.0 * half;
    const double length = mass / tangential;
    if (!(length > 0.0) || length > span || span >= 2.0 * half)
      throw Error(ErrorKind::InvalidGeometry, "cantor_crack needs 0 < mass <= span < box width");
    const auto intervals = detail::fat_cantor(span, length, levels);
    for (auto [a, b] : intervals)
      if (b - a < h) throw Error(ErrorKind::GeometryTooCoarse, "cantor piece below one cell");
    auto occ = detail::rasterize(g, [&](const Point& p) { return detail::in_box(g, p, half); });
    const std::int64_t k = detail::plane_index(g, last, 0.0, "crack plane");
    auto faces = detail::plane_cracks(g, occ, last, k, [&](const Point& p) {
      for (auto [a, b] : intervals)
        if (p[0] > a && p[0] < b) return true;
      return false;
    });
    return make_domain(g, VoxelSet(g, std::move(occ)), CrackSet(std::move(faces)));
  }

  if (name == "random_blobs") {
    if (!params.seed) throw Error(ErrorKind::InvalidGeometry, "random_blobs requires a seed");
    SplitMix64 rng(*params.seed);
    const int count = static_cast<int>(params.get("count", 6));
    const double min_size = params.get("min_size", 0.2);
    const double max_size = params.get("max_size", 0.8);
    const int crack_runs = static_cast<int>(params.get("cracks", 0));
    if (min_size < h) throw Error(ErrorKind::GeometryTooCoarse, "blob size below one cell");
    std::vector<std::uint8_t> occ(static_cast<std::size_t>(g.cell_count()), 0);
    for (int b = 0; b < count; ++b) {
      std::array<double, kMaxDim> lo{}, hi{};
      for (int a = 0; a < n; ++a) {
        const double size = rng.uniform(min_size, max_size);
        const double c = rng.uniform(-half + 0.5 * size, half - 0.5 * size);
        lo[a] = c - 0.5 * size;
        hi[a] = c + 0.5 * size;
      }
      for (std::int64_t lin = 0; lin < g.cell_count(); ++lin) {
        const Point p = g.cell_center(g.cell_at(lin));
        bool in = true;
        for (int a = 0; a < n; ++a) in = in && p[a] > lo[a] && p[a] < hi[a];
        if (in) occ[static_cast<std::size_t>(lin)] = 1;
      }
    }
    std::vector<Face> faces;
    std::vector<std::int64_t> occupied;
    for (std::int64_t lin = 0; lin < g.cell_count(); ++lin)
      if (occ[static_cast<std::size_t>(lin)]) occupied.push_back(lin);
    for (int r = 0; r < crack_runs && !occupied.empty(); ++r) {
      const CellIndex start = g.cell_at(occupied[static_cast<std::size_t>(rng.below(static_cast<std::int64_t>(occupied.size())))]);
      const int axis = static_cast<int>(rng.below(n));
      const int along = (axis + 1 + static_cast<int>(rng.below(n - 1))) % n;
      const std::int64_t len = 1 + rng.below(std::max<std::int64_t>(1, g.cells(along) / 4));
      CellIndex c = start;
      for (std::int64_t s = 0; s < len; ++s, c = c.shifted(along, 1)) {
        const CellIndex up = c.shifted(axis, 1);
        if (!g.contains(c) || !g.contains(up)) break;
        if (!occ[static_cast<std::size_t>(g.linear(c))] || !occ[static_cast<std::size_t>(g.linear(up))]) break;
        faces.push_back(Face{c, axis, Side::positive});
      }
    }
    return make_domain(g, VoxelSet(g, std::move(occ)), CrackSet(std::move(faces)));
  }

  throw Error(ErrorKind::UnknownName, "unknown gallery domain '" + name + "'");
}

}  // namespace perimeter_lab
