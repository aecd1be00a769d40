#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "perimeter_lab/gallery.hpp"
#include "perimeter_lab/measures.hpp"

using namespace perimeter_lab;
using std::numbers::pi;

namespace {

GridGeometry unit_grid(std::int64_t n, int dim = 2, std::int64_t margin = 2) {
  return GridGeometry::centered(dim, n, 1.0, margin);
}

// Square with room around it for balls centred on its boundary.
Domain square(std::int64_t n, int dim = 2) { return gallery("square", {}, unit_grid(n, dim, n / 4)); }

Domain blobs(std::uint64_t seed, std::int64_t n = 48, int cracks = 2) {
  GalleryParams p;
  p.seed = seed;
  p.values["cracks"] = cracks;
  return gallery("random_blobs", p, unit_grid(n));
}

Domain cells(const GridGeometry& g, const std::vector<CellIndex>& list) {
  VoxelSet vs(g);
  std::vector<std::uint8_t> occ(static_cast<std::size_t>(g.cell_count()), 0);
  for (const auto& c : list) occ[static_cast<std::size_t>(g.linear(c))] = 1;
  return make_domain(g, VoxelSet(g, std::move(occ)), CrackSet{});
}

// Area of disk ∩ rectangle by Simpson over the clipped chord, in the angle
// variable x = cx - r cos(phi) so the square-root endpoints are smooth.
double disk_rect_oracle(double cx, double cy, double r, double x0, double x1, double y0, double y1) {
  const double a = std::max(x0, cx - r), b = std::min(x1, cx + r);
  if (b <= a) return 0.0;
  const double pa = std::acos(std::clamp((cx - a) / r, -1.0, 1.0)), pb = std::acos(std::clamp((cx - b) / r, -1.0, 1.0));
  const int m = 20000;
  auto f = [&](double phi) {
    const double w = r * std::sin(phi);
    return std::max(0.0, std::min(y1, cy + w) - std::max(y0, cy - w)) * r * std::sin(phi);
  };
  double s = f(pa) + f(pb);
  const double step = (pb - pa) / m;
  for (int i = 1; i < m; ++i) s += (i % 2 ? 4.0 : 2.0) * f(pa + i * step);
  return s * step / 3.0;
}

// Arc length of the circle inside occupied cells by dense angular sampling.
double arc_oracle(const VoxelSet& vs, const Point& c, double r) {
  const GridGeometry& g = vs.geometry();
  const int m = 400000;
  int inside = 0;
  for (int i = 0; i < m; ++i) {
    const double t = (i + 0.5) * 2.0 * pi / m;
    const double x = c[0] + r * std::cos(t), y = c[1] + r * std::sin(t);
    const CellIndex cell{{static_cast<std::int64_t>(std::floor(g.grid_coord(0, x))),
                          static_cast<std::int64_t>(std::floor(g.grid_coord(1, y))), 0}};
    inside += vs.occupied(cell) ? 1 : 0;
  }
  return 2.0 * pi * r * inside / m;
}

}  // namespace

TEST(Planar, DiskRectAreaMatchesChordIntegration) {
  SplitMix64 rng(3);
  for (int i = 0; i < 300; ++i) {
    const double cx = rng.uniform(-1, 1), cy = rng.uniform(-1, 1), r = rng.uniform(0.05, 1.0);
    double x0 = rng.uniform(-1.5, 1.5), x1 = rng.uniform(-1.5, 1.5), y0 = rng.uniform(-1.5, 1.5),
           y1 = rng.uniform(-1.5, 1.5);
    if (x0 > x1) std::swap(x0, x1);
    if (y0 > y1) std::swap(y0, y1);
    EXPECT_NEAR(planar::disk_rect_area(cx, cy, r, x0, x1, y0, y1), disk_rect_oracle(cx, cy, r, x0, x1, y0, y1), 1e-8);
  }
  EXPECT_NEAR(planar::disk_rect_area(0, 0, 1, -2, 2, -2, 2), pi, 1e-14);
  EXPECT_NEAR(planar::disk_rect_area(0, 0, 1, 0, 2, 0, 2), pi / 4, 1e-14);
}

TEST(Planar, SegmentDiskLength) {
  EXPECT_NEAR(planar::segment_disk_length(-5, 5, 0.6, 0, 0, 1.0), 1.6, 1e-14);
  EXPECT_DOUBLE_EQ(planar::segment_disk_length(-5, 5, 1.0, 0, 0, 1.0), 0.0);
  EXPECT_NEAR(planar::segment_disk_length(0, 5, 0, 0, 0, 1.0), 1.0, 1e-14);
}

TEST(Quadrature, AdaptiveSimpsonIntegratesSmoothAndKinkedFunctions) {
  EXPECT_NEAR(integrate_adaptive([](double x) { return std::sin(x); }, 0, pi, 1e-12), 2.0, 1e-10);
  EXPECT_NEAR(integrate_adaptive([](double x) { return std::abs(x - 0.3); }, 0, 1, 1e-12), 0.29, 1e-10);
}

TEST(Measure, SquareAtSeveralResolutions) {
  for (std::int64_t n : {8, 64, 256}) {
    const auto m = measure(square(n));
    EXPECT_DOUBLE_EQ(m.volume, 4.0);
    EXPECT_DOUBLE_EQ(m.perimeter, 8.0);
    EXPECT_DOUBLE_EQ(m.crack_mass, 0.0);
    EXPECT_EQ(m.boundary_face_count, 4 * n);
  }
}

TEST(Measure, CrackedRectangle) {
  const auto m = measure(gallery("cracked_rectangle", {}, unit_grid(256)));
  EXPECT_DOUBLE_EQ(m.volume, 4.0);
  EXPECT_DOUBLE_EQ(m.perimeter, 8.0);
  EXPECT_DOUBLE_EQ(m.crack_mass, 2.0);
  EXPECT_EQ(m.crack_face_count, 256);
  EXPECT_DOUBLE_EQ(m.boundary_mass_outside_exterior, 10.0);
  EXPECT_TRUE(m.finite);
}

TEST(Measure, SingleCell) {
  for (int dim : {2, 3}) {
    const auto g = unit_grid(8, dim);
    const auto m = measure(cells(g, {CellIndex{{5, 5, dim == 3 ? 5 : 0}}}));
    const double h = g.spacing();
    EXPECT_DOUBLE_EQ(m.volume, std::pow(h, dim));
    EXPECT_DOUBLE_EQ(m.perimeter, 2 * dim * std::pow(h, dim - 1));
  }
}

TEST(Measure, TranslationInvariant) {
  const auto g = unit_grid(32);
  const Domain a = cells(g, {CellIndex{{5, 5, 0}}, CellIndex{{6, 5, 0}}, CellIndex{{6, 6, 0}}, CellIndex{{9, 9, 0}}});
  const Domain b = cells(g, {CellIndex{{15, 12, 0}}, CellIndex{{16, 12, 0}}, CellIndex{{16, 13, 0}}, CellIndex{{19, 16, 0}}});
  const auto ma = measure(a), mb = measure(b);
  EXPECT_DOUBLE_EQ(ma.volume, mb.volume);
  EXPECT_DOUBLE_EQ(ma.perimeter, mb.perimeter);
}

TEST(FaceSetMass, EmptyRowAndDuplicates) {
  const auto g = unit_grid(256);
  EXPECT_DOUBLE_EQ(face_set_mass(CrackSet{}, g), 0.0);
  EXPECT_DOUBLE_EQ(face_set_mass(gallery("cracked_rectangle", {}, g).cracks(), g), 256 * (2.0 / 256));
  const Face f{CellIndex{{3, 3, 0}}, 0, Side::positive};
  const Face twin{CellIndex{{4, 3, 0}}, 0, Side::negative};
  EXPECT_DOUBLE_EQ(face_set_mass(CrackSet({f, twin, f}), g), g.spacing());
}

TEST(RelativePerimeter, BoxContainingEverything) {
  const Domain d = square(64);
  EXPECT_DOUBLE_EQ(relative_perimeter(d, AxisBox{{-1.05, -1.05, 0}, {1.05, 1.05, 0}}), 8.0);
}

TEST(RelativePerimeter, SmallBallOnTopEdge) {
  EXPECT_NEAR(relative_perimeter(square(256), Ball{{0, 1, 0}, 0.1}), 0.2, 1e-14);
}

TEST(RelativePerimeter, CrackCarriesNone) {
  const Domain d = gallery("cracked_rectangle", {}, unit_grid(256));
  EXPECT_DOUBLE_EQ(relative_perimeter(d, Ball{{0.1, 0, 0}, 0.2}), 0.0);
}

TEST(RelativePerimeter, ThreeDimensionalFaceDisk) {
  const Domain d = square(16, 3);
  EXPECT_NEAR(relative_perimeter(d, Ball{{0.1, 0.05, 1.0}, 0.3}), pi * 0.09, 1e-12);
}

TEST(RelativePerimeter, OutsideGridThrows) {
  try {
    relative_perimeter(square(16), Ball{{0, 0, 0}, 5.0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::RegionOutsideGrid);
  }
}

TEST(RelativePerimeter, BoxPartitionIsAdditive) {
  // Partition the grid box along grid planes; faces on partition interfaces
  // are missed by every open box and are accounted separately.
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const Domain d = blobs(seed);
    const auto& g = d.geometry();
    SplitMix64 rng(seed);
    const std::int64_t kx = 3 + rng.below(g.cells(0) - 6), ky = 3 + rng.below(g.cells(1) - 6);
    const double px = g.plane(0, kx), py = g.plane(1, ky);
    double sum = 0.0;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        sum += relative_perimeter(d, AxisBox{{i ? px : g.lo(0), j ? py : g.lo(1), 0}, {i ? g.hi(0) : px, j ? g.hi(1) : py, 0}});
    double on_interfaces = 0.0;
    for_each_boundary_face(d.voxels(), [&](const Face& f, int) {
      if ((f.axis == 0 && f.cell[0] + 1 == kx) || (f.axis == 1 && f.cell[1] + 1 == ky)) on_interfaces += g.spacing();
    });
    EXPECT_NEAR(sum + on_interfaces, perimeter(d.voxels()), 1e-12) << seed;
  }
}

TEST(Density, InteriorFaceAndCorner) {
  const Domain d = square(64);
  const double h = d.geometry().spacing();
  EXPECT_DOUBLE_EQ(density(d, {0, 0, 0}, 0.3), 1.0);
  for (double r : {h / 3, h, 5 * h, 0.4}) {
    EXPECT_NEAR(density(d, {0.5 * h, 1.0, 0}, r), 0.5, 1e-14) << r;
    EXPECT_NEAR(density(d, {1.0, 1.0, 0}, r), 0.25, 1e-14) << r;
  }
}

TEST(Density, ThreeDimensionalFaceAndCorner) {
  const Domain d = square(16, 3);
  EXPECT_NEAR(density(d, {0, 0, 1.0}, 0.2), 0.5, 1e-9);
  EXPECT_NEAR(density(d, {1.0, 1.0, 1.0}, 0.1), 0.125, 1e-9);
}

TEST(Density, CracksDoNotChangeVolume) {
  const Domain d = gallery("cracked_rectangle", {}, unit_grid(128));
  EXPECT_DOUBLE_EQ(density(d, {0.25, 0, 0}, 0.2), 1.0);
}

TEST(Classify, CrackPointIsDensityOneOnTopologicalBoundary) {
  const Domain d = gallery("cracked_rectangle", {}, unit_grid(64));
  const double h = d.geometry().spacing();
  const auto pc = classify_point(d, {0.5 * h, 0, 0});
  EXPECT_EQ(pc.kind, PointKind::density_one);
  EXPECT_TRUE(pc.boundary_topological);
  EXPECT_EQ(pc.density, (Rational{1, 1}));
  // Grid vertex on the crack line also touches closed crack faces.
  EXPECT_TRUE(classify_point(d, {0, 0, 0}).boundary_topological);
  EXPECT_FALSE(classify_point(d, {0.5 * h, 0.5 * h, 0}).boundary_topological);
}

TEST(Classify, FaceCenterIsReducedBoundaryWithNormal) {
  const Domain d = square(64);
  const double h = d.geometry().spacing();
  const auto top = classify_point(d, {0.5 * h, 1.0, 0});
  EXPECT_EQ(top.kind, PointKind::reduced_boundary);
  EXPECT_EQ(top.density, (Rational{1, 2}));
  EXPECT_EQ(top.normal_axis, 1);
  EXPECT_EQ(top.normal_sign, +1);
  const auto left = classify_point(d, {-1.0, 0.5 * h, 0});
  EXPECT_EQ(left.normal_axis, 0);
  EXPECT_EQ(left.normal_sign, -1);
  // A vertex in the middle of a flat side is still a single flat interface.
  EXPECT_EQ(classify_point(d, {0, 1.0, 0}).kind, PointKind::reduced_boundary);
}

TEST(Classify, DiagonalCheckerCornerIsNotReduced) {
  const auto g = unit_grid(16);
  const Domain d = cells(g, {CellIndex{{8, 8, 0}}, CellIndex{{9, 9, 0}}});
  const Point x{g.plane(0, 9), g.plane(1, 9), 0};
  const auto pc = classify_point(d, x);
  EXPECT_EQ(pc.kind, PointKind::boundary_other);
  EXPECT_EQ(pc.density, (Rational{1, 2}));
  // Brute-force shrinking balls agree on the density value.
  for (double r : {g.spacing() / 2, g.spacing() / 8}) EXPECT_NEAR(density(d, x, r), 0.5, 1e-14);
}

TEST(Classify, MatchesSmallBallDensityOnSeededDomains) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Domain d = blobs(seed, 32);
    const auto& g = d.geometry();
    const double h = g.spacing();
    SplitMix64 rng(seed + 1000);
    for (int i = 0; i < 400; ++i) {
      // Snap to the half-cell lattice so vertices, face centers and cell centers all occur.
      Point x{0, 0, 0};
      for (int a = 0; a < 2; ++a) x[a] = g.lo(a) + h * (2.0 + 0.5 * static_cast<double>(rng.below(2 * (g.cells(a) - 4))));
      const auto pc = classify_point(d, x);
      EXPECT_NEAR(density(d, x, h / 4), pc.density.value(), 1e-12);
    }
  }
}

TEST(BoundaryDecomposition, SquareHasOnlyReducedFaces) {
  const auto bd = boundary_decomposition(square(32));
  EXPECT_EQ(bd.reduced_faces.size(), 128u);
  EXPECT_TRUE(bd.crack_faces.empty());
  EXPECT_TRUE(bd.skeleton.exterior_boundary_empty);
  EXPECT_DOUBLE_EQ(bd.skeleton.hn1_mass, 0.0);
  EXPECT_EQ(bd.skeleton.singular_points.size(), 4u);
}

TEST(BoundaryDecomposition, CrackedRectangle) {
  const std::int64_t n = 64;
  const Domain d = gallery("cracked_rectangle", {}, unit_grid(n));
  const auto bd = boundary_decomposition(d);
  const auto m = measure(d);
  EXPECT_EQ(bd.reduced_faces.size(), static_cast<std::size_t>(4 * n));
  EXPECT_EQ(bd.crack_faces.size(), static_cast<std::size_t>(n));
  EXPECT_DOUBLE_EQ(bd.reduced_mass, m.perimeter);
  EXPECT_DOUBLE_EQ(bd.crack_mass, m.crack_mass);
}

TEST(BoundaryDecomposition, CombHasLargePerimeter) {
  const Domain d = gallery("comb", {}, unit_grid(128));
  const auto bd = boundary_decomposition(d);
  EXPECT_TRUE(bd.crack_faces.empty());
  EXPECT_GT(bd.reduced_mass, 2.0 * 8.0);
}

TEST(BoundaryDecomposition, OutwardSignsPointToEmptyCell) {
  const Domain d = blobs(7);
  const auto bd = boundary_decomposition(d);
  for (std::size_t i = 0; i < bd.reduced_faces.size(); ++i) {
    const Face& f = bd.reduced_faces[i];
    EXPECT_EQ(d.voxels().occupied(f.cell), bd.outward_signs[i] > 0);
  }
}

TEST(Complement, PerimeterDuality) {
  const auto g = GridGeometry::centered(2, 64, 1.5, 2);
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    GalleryParams p;
    p.seed = seed;
    const Domain d = gallery("random_blobs", p, g);
    const Domain c = complement_within_box(d, 2);
    // Box of cells at least two from the shell: side 3 units.
    EXPECT_NEAR(perimeter(c.voxels()), perimeter(d.voxels()) + 4 * 3.0, 1e-12);
  }
}

TEST(SphereCap, InteriorFaceAndCorner) {
  const Domain d = square(64);
  const double r = 0.1;
  EXPECT_NEAR(sphere_cap_inside(d, Ball{{0, 0, 0}, r}), 2 * pi * r, 1e-13);
  EXPECT_NEAR(sphere_cap_inside(d, Ball{{0, 1, 0}, r}), pi * r, 1e-13);
  EXPECT_NEAR(sphere_cap_inside(d, Ball{{1, 1, 0}, r}), pi * r / 2, 1e-13);
}

TEST(SphereCap, MatchesAngularSamplingOnBlobs) {
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    const Domain d = blobs(seed, 32);
    SplitMix64 rng(seed);
    const Point c{rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), 0};
    const double r = rng.uniform(0.1, 0.4);
    EXPECT_NEAR(sphere_cap_inside(d, Ball{c, r}), arc_oracle(d.voxels(), c, r), 2e-4) << seed;
  }
}

TEST(SphereCap, ThreeDimensionalHalfSphere) {
  const Domain d = square(16, 3);
  EXPECT_NEAR(sphere_cap_inside(d, Ball{{0.01, 0.02, 1.0}, 0.3}), 2 * pi * 0.09, 1e-8);
}

TEST(Divergence, InteriorBallIsEquality) {
  const auto c = divergence_estimate_check(square(64), Ball{{0.01, 0.02, 0}, 0.3});
  EXPECT_TRUE(c.holds);
  EXPECT_NEAR(c.lhs, 2 * pi * 0.3, 1e-12);
  EXPECT_NEAR(c.rhs, 2 * pi * 0.3, 1e-12);
}

TEST(Divergence, HalfPlaneBall) {
  const double r = 0.1;
  const auto c = divergence_estimate_check(square(64), Ball{{0.003, 1.0, 0}, r});
  EXPECT_TRUE(c.holds);
  EXPECT_NEAR(c.lhs, pi * r, 1e-12);
  EXPECT_NEAR(c.rhs, pi * r + 2 * r, 1e-12);
  ASSERT_TRUE(c.collapsed_ratio.has_value());
}

TEST(Divergence, CornerBallHasPositiveMargin) {
  const auto c = divergence_estimate_check(square(64), Ball{{1.0, 1.0, 0}, 0.1});
  EXPECT_TRUE(c.holds);
  EXPECT_GT(c.margin, 0.0);
}

TEST(Divergence, TangentSphereIsNudged) {
  const Domain d = square(64);
  const auto c = divergence_estimate_check(d, Ball{{0, 0.9, 0}, 0.1});
  EXPECT_TRUE(c.radius_nudged);
  EXPECT_GT(c.ball.radius, 0.1);
  EXPECT_TRUE(c.holds);
}

TEST(Divergence, HoldsOnSeededPairs) {
  int checked = 0;
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    const Domain d = blobs(seed % 20 + 1, 40);
    SplitMix64 rng(seed * 31);
    const Ball b{{rng.uniform(-0.8, 0.8), rng.uniform(-0.8, 0.8), 0}, rng.uniform(0.02, 0.25)};
    const auto c = divergence_estimate_check(d, b);
    EXPECT_TRUE(c.holds) << seed;
    ++checked;
  }
  EXPECT_EQ(checked, 200);
}
