#pragma once

// Closed-form intersections of disks with axis-aligned rectangles, segments
// and grid lines, plus the adaptive quadrature used for 3D ball integrals.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "perimeter_lab/grid.hpp"

namespace perimeter_lab {

struct Ball {
  Point center{0, 0, 0};
  double radius = 1.0;
};

struct AxisBox {
  Point lo{0, 0, 0};
  Point hi{0, 0, 0};
};

/// Volume of the unit ball in R^n.
inline double unit_ball_volume(int n) { return n == 2 ? std::numbers::pi : 4.0 * std::numbers::pi / 3.0; }

/// Surface area of the unit sphere in R^n.
inline double unit_sphere_area(int n) { return n == 2 ? 2.0 * std::numbers::pi : 4.0 * std::numbers::pi; }

inline double ball_volume(int n, double r) { return unit_ball_volume(n) * std::pow(r, n); }
inline double sphere_area(int n, double r) { return unit_sphere_area(n) * std::pow(r, n - 1); }

namespace planar {

/// Antiderivative of sqrt(r^2 - u^2) on [-r, r].
inline double half_chord_integral(double u, double r) {
  u = std::clamp(u, -r, r);
  const double s = std::sqrt(std::max(0.0, r * r - u * u));
  return 0.5 * (u * s + r * r * std::asin(u / r));
}

/// Area of the disk of radius r centred at the origin intersected with the
/// quadrant {u < x, v < y}.
inline double disk_quadrant_area(double x, double y, double r) {
  const double X = std::clamp(x, -r, r);
  if (X <= -r || y <= -r) return 0.0;
  auto S = [r](double a, double b) { return b > a ? half_chord_integral(b, r) - half_chord_integral(a, r) : 0.0; };
  if (y >= r) return 2.0 * S(-r, X);
  const double a = std::sqrt(r * r - y * y);
  double total = 0.0;
  if (y >= 0.0) {
    total += 2.0 * S(-r, std::min(X, -a));
    if (X > -a) {
      const double b = std::min(X, a);
      total += y * (b + a) + S(-a, b);
    }
    if (X > a) total += 2.0 * S(a, X);
  } else if (X > -a) {
    const double b = std::min(X, a);
    total += y * (b + a) + S(-a, b);
  }
  return total;
}

/// Area of disk(center (cx, cy), r) ∩ [x0, x1] x [y0, y1].
inline double disk_rect_area(double cx, double cy, double r, double x0, double x1, double y0, double y1) {
  if (r <= 0.0 || x1 <= x0 || y1 <= y0) return 0.0;
  x0 -= cx;
  x1 -= cx;
  y0 -= cy;
  y1 -= cy;
  const double area = disk_quadrant_area(x1, y1, r) - disk_quadrant_area(x0, y1, r) -
                      disk_quadrant_area(x1, y0, r) + disk_quadrant_area(x0, y0, r);
  return std::clamp(area, 0.0, (x1 - x0) * (y1 - y0));
}

/// Length of the segment {(t, c) : t0 <= t <= t1} inside the open disk of
/// radius r around (ct, cc) (t, c are any two orthogonal coordinates).
inline double segment_disk_length(double t0, double t1, double c, double ct, double cc, double r) {
  const double d = c - cc;
  if (std::abs(d) >= r) return 0.0;
  const double w = std::sqrt(r * r - d * d);
  return std::max(0.0, std::min(t1, ct + w) - std::max(t0, ct - w));
}

/// Angle measure (radians) of the circle of radius r around (cx, cy) lying
/// inside cells accepted by `inside(i, j)`, where cell (i, j) spans
/// [ox + i h, ox + (i+1) h] x [oy + j h, oy + (j+1) h].
template <typename Inside>
double circle_angle_inside(double cx, double cy, double r, double ox, double oy, double h, Inside&& inside) {
  std::vector<double> angles{0.0, 2.0 * std::numbers::pi};
  auto add = [&](double a) {
    if (a < 0) a += 2.0 * std::numbers::pi;
    angles.push_back(a);
  };
  const auto i_lo = static_cast<std::int64_t>(std::ceil((cx - r - ox) / h));
  const auto i_hi = static_cast<std::int64_t>(std::floor((cx + r - ox) / h));
  for (std::int64_t i = i_lo; i <= i_hi; ++i) {
    const double dx = ox + static_cast<double>(i) * h - cx;
    if (std::abs(dx) > r) continue;
    const double dy = std::sqrt(std::max(0.0, r * r - dx * dx));
    add(std::atan2(dy, dx));
    add(std::atan2(-dy, dx));
  }
  const auto j_lo = static_cast<std::int64_t>(std::ceil((cy - r - oy) / h));
  const auto j_hi = static_cast<std::int64_t>(std::floor((cy + r - oy) / h));
  for (std::int64_t j = j_lo; j <= j_hi; ++j) {
    const double dy = oy + static_cast<double>(j) * h - cy;
    if (std::abs(dy) > r) continue;
    const double dx = std::sqrt(std::max(0.0, r * r - dy * dy));
    add(std::atan2(dy, dx));
    add(std::atan2(dy, -dx));
  }
  std::sort(angles.begin(), angles.end());
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < angles.size(); ++k) {
    const double a0 = angles[k], a1 = angles[k + 1];
    if (a1 - a0 <= 0.0) continue;
    const double mid = 0.5 * (a0 + a1);
    const double px = cx + r * std::cos(mid), py = cy + r * std::sin(mid);
    const auto i = static_cast<std::int64_t>(std::floor((px - ox) / h));
    const auto j = static_cast<std::int64_t>(std::floor((py - oy) / h));
    if (inside(i, j)) total += a1 - a0;
  }
  return total;
}

}  // namespace planar

/// Adaptive Simpson quadrature; `abs_tol` is the target absolute error.
template <typename F>
double integrate_adaptive(F&& f, double a, double b, double abs_tol, int max_depth = 40) {
  if (!(b > a)) return 0.0;
  struct Rec {
    F& f;
    double step(double a, double fa, double b, double fb, double m, double fm, double whole, double tol, int depth) {
      const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
      const double flm = f(lm), frm = f(rm);
      const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
      const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
      const double delta = left + right - whole;
      if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
      return step(a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
             step(m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
    }
  };
  Rec rec{f};
  const double fa = f(a), fb = f(b);
  // Seed with a 4-panel split so integrands with narrow features are sampled.
  double total = 0.0;
  const int panels = 4;
  for (int p = 0; p < panels; ++p) {
    const double pa = a + (b - a) * p / panels, pb = a + (b - a) * (p + 1) / panels, pm = 0.5 * (pa + pb);
    const double fpa = p == 0 ? fa : f(pa), fpb = p == panels - 1 ? fb : f(pb), fpm = f(pm);
    const double whole = (pb - pa) / 6.0 * (fpa + 4.0 * fpm + fpb);
    total += rec.step(pa, fpa, pb, fpb, pm, fpm, whole, abs_tol / panels, max_depth);
  }
  return total;
}

}  // namespace perimeter_lab
