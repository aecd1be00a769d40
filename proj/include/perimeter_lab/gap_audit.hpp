#pragma once

// Lower-bound certificates for the perimeter of interior approximations near
// cracks, gap tables along approximation sequences, and semicontinuity
// checks on subregions.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "perimeter_lab/approx.hpp"
#include "perimeter_lab/constants.hpp"
#include "perimeter_lab/covering.hpp"
#include "perimeter_lab/measures.hpp"

namespace perimeter_lab {

struct IsoperimetricSample {
  Ball region;
  double volume_inside = 0.0;   // |E ∩ B|
  double volume_outside = 0.0;  // |B \ E|
  double min_volume_side = 0.0;
  double relative_perimeter = 0.0;
  double ratio = 0.0;  // min_volume_side^{(n-1)/n} / P(E; B)
};

inline IsoperimetricSample isoperimetric_ratio(const VoxelSet& e, const Ball& b) {
  const GridGeometry& g = e.geometry();
  detail::require_within_grid(g, b);
  const int n = g.dim();
  IsoperimetricSample s;
  s.region = b;
  const BallVolume v = occupied_volume_in_ball(e, b);
  const double full = ball_volume(n, b.radius);
  s.volume_inside = v.volume;
  s.volume_outside = v.none_occupied ? full : (v.all_occupied ? 0.0 : std::max(0.0, full - v.volume));
  s.min_volume_side = std::min(s.volume_inside, s.volume_outside);
  s.relative_perimeter = relative_perimeter(e, b);
  if (s.min_volume_side <= 0.0) return s;
  if (s.relative_perimeter <= 0.0)
    throw Error(ErrorKind::DegenerateBall, "both sides have volume but no interface inside the ball");
  s.ratio = std::pow(s.min_volume_side, (n - 1.0) / n) / s.relative_perimeter;
  return s;
}

namespace detail {

/// Occupancy of Omega \ E (cells of omega not in e).
inline VoxelSet difference(const VoxelSet& omega, const VoxelSet& e) {
  std::vector<std::uint8_t> occ(omega.data().begin(), omega.data().end());
  const auto ed = e.data();
  for (std::size_t i = 0; i < occ.size(); ++i)
    if (ed[i]) occ[i] = 0;
  return VoxelSet(omega.geometry(), std::move(occ));
}

/// Distance from x to the nearest closed reduced-boundary face of omega.
inline double distance_to_reduced_boundary(const Domain& omega, const Point& x) {
  const GridGeometry& g = omega.geometry();
  double best = std::numeric_limits<double>::infinity();
  for_each_boundary_face(omega.voxels(), [&](const Face& f, int) {
    const auto fg = face_geometry(g, f);
    double d2 = 0.0;
    for (int a = 0; a < g.dim(); ++a) {
      double lo = fg.lo[a], hi = fg.hi[a];
      if (a == f.axis) lo = hi = fg.plane;
      const double gap = std::max({0.0, lo - x[a], x[a] - hi});
      d2 += gap * gap;
    }
    best = std::min(best, d2);
  });
  return std::sqrt(best);
}

inline double grid_diameter(const GridGeometry& g) {
  double s = 0.0;
  for (int a = 0; a < g.dim(); ++a) s += g.extent(a) * g.extent(a);
  return std::sqrt(s);
}

}  // namespace detail

struct CertificateBall {
  Ball ball;
  double fraction = 0.0;  // |(Omega \ E) ∩ B| / |B|
};

inline constexpr double kWindowLow = 1.0 / 3.0;
inline constexpr double kWindowHigh = 0.5;

/// Radius with |(Omega \ E) ∩ B_r(x)| / |B_r| in (1/3, 1/2), by bisection
/// over [2h, cap] (cap: distance to the reduced boundary, extended to the
/// grid diameter if the window is not reached before it).
inline CertificateBall find_certificate_ball(const Domain& omega, const VoxelSet& diff, const Point& x,
                                             double cap = -1.0) {
  const GridGeometry& g = omega.geometry();
  const int n = g.dim();
  const double h = g.spacing();
  auto fraction = [&](double r) {
    const Ball b = nudge_off_planes(g, Ball{x, r});
    const BallVolume v = occupied_volume_in_ball(diff, b);
    if (v.all_occupied) return std::pair{1.0, b};
    return std::pair{v.volume / ball_volume(n, b.radius), b};
  };
  auto in_window = [](double f) { return f > kWindowLow && f < kWindowHigh; };
  const double target = 0.47;

  double lo = 2.0 * h;
  auto [f_lo, b_lo] = fraction(lo);
  if (in_window(f_lo)) return {b_lo, f_lo};
  if (f_lo <= kWindowLow)
    throw Error(ErrorKind::WindowUnreachable, "volume fraction already below the window at two cells");

  const double diameter = detail::grid_diameter(g);
  double hi = cap > lo ? std::min(cap, diameter) : diameter;
  auto [f_hi, b_hi] = fraction(hi);
  if (f_hi >= kWindowHigh && hi < diameter) {
    hi = diameter;
    std::tie(f_hi, b_hi) = fraction(hi);
  }
  if (in_window(f_hi) && f_hi >= target) return {b_hi, f_hi};
  if (f_hi >= kWindowHigh) throw Error(ErrorKind::WindowUnreachable, "volume fraction never drops into the window");

  std::optional<CertificateBall> best;
  if (in_window(f_hi)) best = CertificateBall{b_hi, f_hi};
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    auto [f, b] = fraction(mid);
    if (in_window(f) && (!best || std::abs(f - target) < std::abs(best->fraction - target)))
      best = CertificateBall{b, f};
    if (best && std::abs(best->fraction - target) < 0.02) break;
    if (f >= target)
      lo = mid;
    else
      hi = mid;
    if (hi - lo < 1e-12 * h) break;
  }
  if (!best) throw Error(ErrorKind::WindowUnreachable, "bisection did not enter the window");
  return *best;
}

struct CertifiedBall {
  Ball ball;
  double fraction = 0.0;
  double radius_cap = 0.0;            // distance to the reduced boundary of Omega
  double min_volume_side = 0.0;       // min(|D ∩ B|, |B \ D|), D = Omega \ E
  double omega_perimeter = 0.0;       // P(Omega; B)
  double lower_bound = 0.0;           // max(0, min^{(n-1)/n} / Ĉ_iso - P(Omega; B))
  double actual = 0.0;                // P(E; B)
  int family = 0;
};

struct GapCertificate {
  std::vector<Point> samples;
  std::size_t unreachable = 0;
  std::vector<CertifiedBall> balls;  // every chosen ball, tagged by family
  int families = 0;
  int chosen_family = -1;
  double enlargement = 0.0;          // r1: the accounting regions are the balls themselves
  double outside_term = 0.0;         // P(E; complement of the closed chosen balls)
  double bound_sum = 0.0;            // Σ lower bounds over the chosen family
  double certified_total = 0.0;
  double actual_perimeter = 0.0;     // P(E)
  double omega_perimeter = 0.0;      // P(Omega)
  double crack_mass = 0.0;
  double c_hat = 0.0;                // (certified_total - P(Omega)) / crack_mass
  double iso_constant = 0.0;
  bool regions_disjoint = true;
  bool window_ok = true;
  bool sound = true;
};

struct CrackSampling {
  std::int64_t stride = 0;      // 0: pick so roughly max_points samples remain
  std::int64_t max_points = 128;
};

inline GapCertificate certified_gap(const Domain& omega, const VoxelSet& e, const CrackSampling& sampling = {}) {
  const GridGeometry& g = omega.geometry();
  const int n = g.dim();
  const double h = g.spacing();
  if (omega.cracks().empty()) throw Error(ErrorKind::InvalidGeometry, "certificates need a nonempty crack set");
  if (!containment_check(omega, e)) throw Error(ErrorKind::InvalidGeometry, "approximant is not compactly contained");

  GapCertificate cert;
  cert.iso_constant = isoperimetric_constant(n);
  cert.crack_mass = face_set_mass(omega.cracks(), g);
  cert.omega_perimeter = perimeter(omega.voxels());
  cert.actual_perimeter = perimeter(e);

  const auto& faces = omega.cracks().faces();
  std::int64_t stride = sampling.stride;
  if (stride <= 0)
    stride = std::max<std::int64_t>(1, static_cast<std::int64_t>(faces.size()) / std::max<std::int64_t>(1, sampling.max_points));
  for (std::size_t i = 0; i < faces.size(); i += static_cast<std::size_t>(stride)) {
    Point p = g.cell_center(faces[i].cell);
    p[faces[i].axis] += 0.5 * h;
    cert.samples.push_back(p);
  }

  const VoxelSet diff = detail::difference(omega.voxels(), e);
  std::vector<CertifiedBall> found;
  for (const Point& x : cert.samples) {
    const double cap = detail::distance_to_reduced_boundary(omega, x);
    try {
      const CertificateBall cb = find_certificate_ball(omega, diff, x, cap);
      CertifiedBall b;
      b.ball = cb.ball;
      b.fraction = cb.fraction;
      b.radius_cap = cap;
      found.push_back(b);
    } catch (const Error& err) {
      if (err.kind() != ErrorKind::WindowUnreachable) throw;
      ++cert.unreachable;
    }
  }
  if (found.empty()) throw Error(ErrorKind::NoCertifiablePoints, "no crack sample reached the volume window");

  std::vector<Ball> balls;
  for (const auto& b : found) balls.push_back(b.ball);
  const BallCover cover = greedy_bounded_overlap(balls, n);
  cert.families = cover.families;
  const double full_exp = (n - 1.0) / n;
  std::vector<double> family_sum(static_cast<std::size_t>(cover.families), 0.0);
  for (std::size_t i = 0; i < cover.balls.size(); ++i) {
    CertifiedBall b = found[cover.source[i]];
    b.family = cover.family[i];
    const double full = ball_volume(n, b.ball.radius);
    const BallVolume dv = occupied_volume_in_ball(diff, b.ball);
    const double inside = dv.all_occupied ? full : dv.volume;
    b.fraction = inside / full;
    b.min_volume_side = std::min(inside, std::max(0.0, full - inside));
    b.omega_perimeter = detail::relative_perimeter_unchecked(omega.voxels(), b.ball);
    b.actual = detail::relative_perimeter_unchecked(e, b.ball);
    b.lower_bound = std::max(0.0, std::pow(b.min_volume_side, full_exp) / cert.iso_constant - b.omega_perimeter);
    cert.window_ok = cert.window_ok && b.fraction > kWindowLow && b.fraction < kWindowHigh;
    family_sum[static_cast<std::size_t>(b.family)] += b.lower_bound;
    cert.balls.push_back(b);
  }
  cert.chosen_family = static_cast<int>(std::max_element(family_sum.begin(), family_sum.end()) - family_sum.begin());

  // Extend the chosen family by any remaining candidate (in sample order)
  // that is disjoint from all of its members; disjointness is all the
  // accounting needs.
  std::vector<detail::ExactBall> members;
  std::vector<bool> used(found.size(), false);
  for (std::size_t i = 0; i < cover.balls.size(); ++i) {
    used[cover.source[i]] = true;
    if (cover.family[i] == cert.chosen_family) members.push_back(detail::exact_ball(cover.balls[i], n));
  }
  for (std::size_t i = 0; i < found.size(); ++i) {
    if (used[i]) continue;
    const auto cand = detail::exact_ball(found[i].ball, n);
    bool ok = true;
    for (const auto& m : members)
      if (!detail::open_balls_disjoint(cand, m, n)) {
        ok = false;
        break;
      }
    if (!ok) continue;
    members.push_back(cand);
    CertifiedBall b = found[i];
    b.family = cert.chosen_family;
    const double full = ball_volume(n, b.ball.radius);
    const BallVolume dv = occupied_volume_in_ball(diff, b.ball);
    const double inside = dv.all_occupied ? full : dv.volume;
    b.fraction = inside / full;
    b.min_volume_side = std::min(inside, std::max(0.0, full - inside));
    b.omega_perimeter = detail::relative_perimeter_unchecked(omega.voxels(), b.ball);
    b.actual = detail::relative_perimeter_unchecked(e, b.ball);
    b.lower_bound = std::max(0.0, std::pow(b.min_volume_side, full_exp) / cert.iso_constant - b.omega_perimeter);
    cert.window_ok = cert.window_ok && b.fraction > kWindowLow && b.fraction < kWindowHigh;
    cert.balls.push_back(b);
  }
  BallCover accounting;
  for (const auto& b : cert.balls) {
    accounting.balls.push_back(b.ball);
    accounting.family.push_back(b.family);
  }
  cert.regions_disjoint = families_disjoint(accounting, n);

  double inside_sum = 0.0;
  for (const auto& b : cert.balls) {
    if (b.family != cert.chosen_family) continue;
    inside_sum += b.actual;
    cert.bound_sum += b.lower_bound;
    cert.sound = cert.sound && b.lower_bound <= b.actual * (1.0 + 1e-9) + 1e-12;
  }
  cert.outside_term = cert.actual_perimeter - inside_sum;
  cert.certified_total = cert.outside_term + cert.bound_sum;
  cert.sound = cert.sound && cert.regions_disjoint &&
               cert.certified_total <= cert.actual_perimeter * (1.0 + 1e-9);
  cert.c_hat = cert.crack_mass > 0.0 ? (cert.certified_total - cert.omega_perimeter) / cert.crack_mass : 0.0;
  return cert;
}

inline nlohmann::json to_json(const GapCertificate& c, int dim) {
  nlohmann::json j;
  auto balls = nlohmann::json::array();
  for (const auto& b : c.balls)
    balls.push_back({{"center", point_json(b.ball.center, dim)},
                     {"radius", b.ball.radius},
                     {"family", b.family},
                     {"fraction", b.fraction},
                     {"radius_cap", b.radius_cap},
                     {"lower_bound", b.lower_bound},
                     {"actual", b.actual},
                     {"omega_perimeter", b.omega_perimeter}});
  j["balls"] = std::move(balls);
  j["families"] = c.families;
  j["chosen_family"] = c.chosen_family;
  j["samples"] = c.samples.size();
  j["unreachable"] = c.unreachable;
  j["totals"] = {{"outside_term", c.outside_term},     {"bound_sum", c.bound_sum},
                 {"certified_total", c.certified_total}, {"P_E", c.actual_perimeter},
                 {"P_Omega", c.omega_perimeter},        {"crack_mass", c.crack_mass},
                 {"c_hat", c.c_hat},                    {"iso_constant", c.iso_constant},
                 {"enlargement", c.enlargement},        {"sound", c.sound},
                 {"window_ok", c.window_ok},            {"regions_disjoint", c.regions_disjoint}};
  return j;
}

// ---------------------------------------------------------------------------
// Gap tables

struct GapRow {
  std::size_t k = 0;
  double param = 0.0;
  double perimeter_e = 0.0;
  double perimeter_omega = 0.0;
  double crack_mass = 0.0;
  double gap = 0.0;
  double c_hat = 0.0;
  std::optional<double> certified_total;
  std::optional<bool> sound;
  std::optional<GapCertificate> certificate;
  std::string error;
};

struct GapTable {
  std::vector<GapRow> rows;
  double liminf_gap = 0.0;  // trailing minimum over the last three steps
  double c_hat = 0.0;       // liminf_gap / crack_mass (0 without cracks)
};

/// Trailing minimum over the last `window` entries.
inline double trailing_min(const std::vector<double>& v, std::size_t window = 3) {
  if (v.empty()) return 0.0;
  const std::size_t start = v.size() > window ? v.size() - window : 0;
  return *std::min_element(v.begin() + static_cast<std::ptrdiff_t>(start), v.end());
}

inline GapTable gap_experiment(const Domain& omega, const ApproxSequence& seq, bool certify = false,
                               const CrackSampling& sampling = {}) {
  for (const auto& s : seq.steps)
    if (!s.compactly_contained) throw Error(ErrorKind::InvalidGeometry, "gap experiment needs contained steps");
  GapTable t;
  const MeasureReport m = measure(omega);
  std::vector<double> gaps;
  for (std::size_t k = 0; k < seq.steps.size(); ++k) {
    const auto& s = seq.steps[k];
    GapRow r;
    r.k = k;
    r.param = s.param;
    r.perimeter_e = s.perimeter;
    r.perimeter_omega = m.perimeter;
    r.crack_mass = m.crack_mass;
    r.gap = s.perimeter - m.perimeter;
    r.c_hat = m.crack_mass > 0.0 ? r.gap / m.crack_mass : 0.0;
    if (certify && m.crack_mass > 0.0) {
      try {
        const GapCertificate c = certified_gap(omega, s.set, sampling);
        r.certified_total = c.certified_total;
        r.sound = c.sound;
        r.certificate = c;
      } catch (const Error& e) {
        r.error = e.what();
      }
    }
    gaps.push_back(r.gap);
    t.rows.push_back(r);
  }
  t.liminf_gap = trailing_min(gaps);
  t.c_hat = m.crack_mass > 0.0 ? t.liminf_gap / m.crack_mass : 0.0;
  return t;
}

inline const char* gap_csv_header() { return "k,param,P_E,P_Omega,crack_mass,gap,c_hat,certified_total,sound"; }

inline std::vector<std::string> gap_csv_rows(const GapTable& t) {
  std::vector<std::string> rows;
  for (const auto& r : t.rows) {
    std::ostringstream os;
    os << r.k << ',' << format_number(r.param) << ',' << format_number(r.perimeter_e) << ','
       << format_number(r.perimeter_omega) << ',' << format_number(r.crack_mass) << ',' << format_number(r.gap)
       << ',' << format_number(r.c_hat) << ',' << (r.certified_total ? format_number(*r.certified_total) : "")
       << ',' << (r.sound ? (*r.sound ? "true" : "false") : "");
    rows.push_back(os.str());
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Lower semicontinuity on a region

struct LscReport {
  std::vector<double> relative_perimeters;  // P(E_k; w)
  double omega_relative_perimeter = 0.0;    // P(Omega; w)
  double liminf_estimate = 0.0;             // trailing minimum over the last three steps
  double tolerance = 0.0;
  std::int64_t crossing_faces = 0;          // reduced faces of Omega meeting ∂w
  double skeleton_mass = 0.0;               // non-flat boundary skeleton inside w
  bool holds = false;
  std::optional<std::size_t> first_index;   // first k from which every later step passes
};

namespace detail {

inline bool face_meets_box_boundary(const GridGeometry& g, const Face& f, const AxisBox& w) {
  const auto fg = face_geometry(g, f);
  bool meets_closed = true, inside_open = true;
  for (int a = 0; a < g.dim(); ++a) {
    const double lo = a == f.axis ? fg.plane : fg.lo[a];
    const double hi = a == f.axis ? fg.plane : fg.hi[a];
    meets_closed = meets_closed && hi >= w.lo[a] && lo <= w.hi[a];
    inside_open = inside_open && lo > w.lo[a] && hi < w.hi[a];
  }
  return meets_closed && !inside_open;
}

inline bool face_meets_sphere(const GridGeometry& g, const Face& f, const Ball& b) {
  const auto fg = face_geometry(g, f);
  double near = 0.0, far = 0.0;
  for (int a = 0; a < g.dim(); ++a) {
    const double lo = a == f.axis ? fg.plane : fg.lo[a];
    const double hi = a == f.axis ? fg.plane : fg.hi[a];
    const double gap = std::max({0.0, lo - b.center[a], b.center[a] - hi});
    const double ext = std::max(std::abs(lo - b.center[a]), std::abs(hi - b.center[a]));
    near += gap * gap;
    far += ext * ext;
  }
  return near <= b.radius * b.radius && far >= b.radius * b.radius;
}

inline bool point_in_region(const Point& x, const Region& w, int dim) {
  if (const auto* b = std::get_if<Ball>(&w)) {
    double d2 = 0.0;
    for (int a = 0; a < dim; ++a) d2 += (x[a] - b->center[a]) * (x[a] - b->center[a]);
    return d2 < b->radius * b->radius;
  }
  const auto& box = std::get<AxisBox>(w);
  for (int a = 0; a < dim; ++a)
    if (!(x[a] > box.lo[a] && x[a] < box.hi[a])) return false;
  return true;
}

}  // namespace detail

/// liminf_k P(E_k; w) >= P(Omega; w) - tol, with tol = 4n h^{n-1} per reduced
/// face meeting ∂w plus 2 (last parameter) per unit of non-flat skeleton
/// mass inside w.
inline LscReport lsc_check(const Domain& omega, const ApproxSequence& seq, const Region& w) {
  const GridGeometry& g = omega.geometry();
  const int n = g.dim();
  const double h = g.spacing();
  LscReport rep;
  rep.omega_relative_perimeter = relative_perimeter(omega.voxels(), w);
  for (const auto& s : seq.steps) rep.relative_perimeters.push_back(relative_perimeter(s.set, w));
  for_each_boundary_face(omega.voxels(), [&](const Face& f, int) {
    const bool meets = std::holds_alternative<Ball>(w) ? detail::face_meets_sphere(g, f, std::get<Ball>(w))
                                                       : detail::face_meets_box_boundary(g, f, std::get<AxisBox>(w));
    if (meets) ++rep.crossing_faces;
  });
  const auto bd = boundary_decomposition(omega);
  const double unit = n == 2 ? 1.0 : h;
  for (const Point& p : bd.skeleton.singular_points)
    if (detail::point_in_region(p, w, n)) rep.skeleton_mass += unit;
  const double last = seq.steps.empty() ? 0.0 : seq.steps.back().param;
  rep.tolerance = 4.0 * n * std::pow(h, n - 1) * static_cast<double>(rep.crossing_faces) +
                  2.0 * last * rep.skeleton_mass + 1e-9 * std::max(1.0, rep.omega_relative_perimeter);
  rep.liminf_estimate = trailing_min(rep.relative_perimeters);
  const double floor_value = rep.omega_relative_perimeter - rep.tolerance;
  rep.holds = rep.relative_perimeters.empty() ? false : rep.liminf_estimate >= floor_value;
  for (std::size_t k = rep.relative_perimeters.size(); k-- > 0;) {
    if (rep.relative_perimeters[k] < floor_value) break;
    rep.first_index = k;
  }
  return rep;
}

}  // namespace perimeter_lab
