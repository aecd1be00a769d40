#pragma once

// Experiment driver behind the perimeter-lab CLI: config parsing and
// validation, one function per subcommand, CSV tables with a config hash in
// every row, and JSON sidecars describing how each output was produced.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "perimeter_lab/approx.hpp"
#include "perimeter_lab/covering.hpp"
#include "perimeter_lab/domain_io.hpp"
#include "perimeter_lab/gallery.hpp"
#include "perimeter_lab/gap_audit.hpp"

namespace perimeter_lab {

inline constexpr const char* kVersion = "0.1.0";

// ---------------------------------------------------------------------------
// Config

struct GridSpec {
  int dim = 2;
  std::int64_t n = 256;
  double half_extent = 1.0;
  std::int64_t margin = 2;
};

struct DomainSpec {
  std::string name;
  std::string file;  // load from here instead of the gallery when set
  GalleryParams params;
  GridSpec grid;
};

struct ConstructionSpec {
  std::string method = "erosion";
  std::vector<double> deltas{0.2, 0.1, 0.05, 0.025};
  std::vector<double> eps;
  std::vector<double> t{0.5, 0.6, 0.7, 0.8, 0.9};
  double theta = 0.0;
  int refine = 2;
  double density_delta = 0.05;  // density threshold 1 - delta in failure reports
  double density_r0 = 0.2;
};

struct AuditSpec {
  bool certify = true;
  std::int64_t max_points = 128;
  std::string sequence_file;
};

struct ExteriorSpec {
  std::int64_t margin = 2;
  std::vector<double> deltas{0.2, 0.1, 0.05, 0.025};
};

struct SweepSpec {
  std::vector<std::int64_t> n_values;
  std::vector<std::string> domains;
};

struct OutputSpec {
  std::string dir = ".";
  std::string prefix;
};

struct ExperimentConfig {
  DomainSpec domain;
  ConstructionSpec construction;
  AuditSpec audit;
  ExteriorSpec exterior;
  SweepSpec sweep;
  OutputSpec output;
  std::optional<std::uint64_t> seed;
  nlohmann::json resolved;  // the validated document with overrides applied
  std::string hash;
};

struct ConfigOverrides {
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<int> refine;
};

namespace detail {

using nlohmann::json;

[[noreturn]] inline void config_error(const std::string& path, const std::string& msg) {
  throw Error(ErrorKind::ConfigError, path + ": " + msg);
}

inline void check_object(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) config_error(path, "expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : allowed) known = known || it.key() == k;
    if (!known) config_error(path + "." + it.key(), "unknown key");
  }
}

inline double number_value(const json& v, const std::string& path) {
  if (!v.is_number()) config_error(path, "expected a number");
  return v.get<double>();
}

inline std::int64_t integer_value(const json& v, const std::string& path) {
  if (!v.is_number_integer()) config_error(path, "expected an integer");
  return v.get<std::int64_t>();
}

inline std::string string_value(const json& v, const std::string& path) {
  if (!v.is_string()) config_error(path, "expected a string");
  return v.get<std::string>();
}

inline bool bool_value(const json& v, const std::string& path) {
  if (!v.is_boolean()) config_error(path, "expected a boolean");
  return v.get<bool>();
}

template <typename T, typename Get>
void read(const json& j, const char* key, const std::string& path, T& out, Get&& get) {
  if (j.contains(key)) out = get(j.at(key), path + "." + key);
}

template <typename T, typename Get>
void read_list(const json& j, const char* key, const std::string& path, std::vector<T>& out, Get&& get) {
  if (!j.contains(key)) return;
  const json& v = j.at(key);
  const std::string p = path + "." + key;
  if (!v.is_array()) config_error(p, "expected an array");
  out.clear();
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(get(v[i], p + "[" + std::to_string(i) + "]"));
}

inline std::uint64_t seed_value(const json& v, const std::string& path) {
  if (!v.is_number_unsigned()) config_error(path, "expected a non-negative integer");
  return v.get<std::uint64_t>();
}

inline void parse_domain_spec(const json& j, const std::string& path, DomainSpec& d) {
  check_object(j, path, {"name", "params", "grid", "file"});
  read(j, "name", path, d.name, string_value);
  read(j, "file", path, d.file, string_value);
  if (d.name.empty() == d.file.empty()) config_error(path, "exactly one of name and file is required");
  if (!d.name.empty()) {
    const auto& names = gallery_names();
    if (std::find(names.begin(), names.end(), d.name) == names.end())
      throw Error(ErrorKind::UnknownName, path + ".name: unknown gallery domain '" + d.name + "'");
  }
  if (j.contains("params")) {
    const json& p = j.at("params");
    if (!p.is_object()) config_error(path + ".params", "expected an object");
    for (auto it = p.begin(); it != p.end(); ++it)
      d.params.values[it.key()] = number_value(it.value(), path + ".params." + it.key());
  }
  if (j.contains("grid")) {
    const json& g = j.at("grid");
    const std::string gp = path + ".grid";
    check_object(g, gp, {"dim", "N", "half_extent", "margin"});
    std::int64_t dim = d.grid.dim;
    read(g, "dim", gp, dim, integer_value);
    if (dim != 2 && dim != 3) config_error(gp + ".dim", "must be 2 or 3");
    d.grid.dim = static_cast<int>(dim);
    read(g, "N", gp, d.grid.n, integer_value);
    if (d.grid.n < 4) config_error(gp + ".N", "must be at least 4");
    read(g, "half_extent", gp, d.grid.half_extent, number_value);
    if (!(d.grid.half_extent > 0.0)) config_error(gp + ".half_extent", "must be positive");
    read(g, "margin", gp, d.grid.margin, integer_value);
    if (d.grid.margin < 1) config_error(gp + ".margin", "must be at least 1");
  }
}

inline void parse_construction(const json& j, const std::string& path, ConstructionSpec& c) {
  check_object(j, path, {"method", "deltas", "eps", "t", "theta", "refine", "density_delta", "density_r0"});
  read(j, "method", path, c.method, string_value);
  if (c.method != "erosion" && c.method != "mollify" && c.method != "cover")
    config_error(path + ".method", "expected erosion, mollify or cover");
  read_list(j, "deltas", path, c.deltas, number_value);
  read_list(j, "eps", path, c.eps, number_value);
  read_list(j, "t", path, c.t, number_value);
  read(j, "theta", path, c.theta, number_value);
  std::int64_t refine = c.refine;
  read(j, "refine", path, refine, integer_value);
  c.refine = static_cast<int>(refine);
  read(j, "density_delta", path, c.density_delta, number_value);
  read(j, "density_r0", path, c.density_r0, number_value);
  for (std::size_t i = 0; i < c.deltas.size(); ++i)
    if (!(c.deltas[i] > 0.0)) config_error(path + ".deltas[" + std::to_string(i) + "]", "must be positive");
  for (std::size_t i = 0; i < c.eps.size(); ++i)
    if (!(c.eps[i] > 0.0)) config_error(path + ".eps[" + std::to_string(i) + "]", "must be positive");
  for (std::size_t i = 0; i < c.t.size(); ++i)
    if (!(c.t[i] > 0.0 && c.t[i] < 1.0)) config_error(path + ".t[" + std::to_string(i) + "]", "must lie in (0, 1)");
  if (c.method != "erosion" && c.eps.empty()) config_error(path + ".eps", "required for method " + c.method);
  if (c.refine < 2) config_error(path + ".refine", "must be at least 2");
  if (!(c.theta >= 0.0 && c.theta < 1.0)) config_error(path + ".theta", "must lie in [0, 1)");
}

}  // namespace detail

/// FNV-1a over the compact dump (keys sorted) of the resolved config.  The
/// output block is left out so relocating results keeps the hash.
inline std::string config_hash(const nlohmann::json& resolved) {
  nlohmann::json j = resolved;
  if (j.is_object()) j.erase("output");
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : j.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline ExperimentConfig parse_config(nlohmann::json j, const ConfigOverrides& ov = {}) {
  using namespace detail;
  if (!j.is_object()) config_error("config", "expected an object");
  if (ov.out) j["output"]["dir"] = *ov.out;
  if (ov.seed) j["seed"] = *ov.seed;
  if (ov.refine) j["construction"]["refine"] = *ov.refine;

  ExperimentConfig cfg;
  check_object(j, "config", {"domain", "construction", "audit", "exterior", "sweep", "output", "seed"});
  if (j.contains("seed")) cfg.seed = seed_value(j.at("seed"), "config.seed");
  if (j.contains("domain")) parse_domain_spec(j.at("domain"), "config.domain", cfg.domain);
  cfg.domain.params.seed = cfg.seed;
  if (cfg.domain.name == "random_blobs" && !cfg.seed) config_error("config.seed", "required for random_blobs");

  if (j.contains("construction")) parse_construction(j.at("construction"), "config.construction", cfg.construction);
  if (j.contains("audit")) {
    const json& a = j.at("audit");
    check_object(a, "config.audit", {"certify", "max_points", "sequence_file"});
    read(a, "certify", "config.audit", cfg.audit.certify, bool_value);
    read(a, "max_points", "config.audit", cfg.audit.max_points, integer_value);
    read(a, "sequence_file", "config.audit", cfg.audit.sequence_file, string_value);
    if (cfg.audit.max_points < 1) config_error("config.audit.max_points", "must be positive");
  }
  if (j.contains("exterior")) {
    const json& e = j.at("exterior");
    check_object(e, "config.exterior", {"margin", "deltas"});
    read(e, "margin", "config.exterior", cfg.exterior.margin, integer_value);
    read_list(e, "deltas", "config.exterior", cfg.exterior.deltas, number_value);
    if (cfg.exterior.margin < 1) config_error("config.exterior.margin", "must be at least 1");
  }
  if (j.contains("sweep")) {
    const json& s = j.at("sweep");
    check_object(s, "config.sweep", {"N", "domains"});
    read_list(s, "N", "config.sweep", cfg.sweep.n_values, integer_value);
    read_list(s, "domains", "config.sweep", cfg.sweep.domains, string_value);
    const auto& names = gallery_names();
    for (std::size_t i = 0; i < cfg.sweep.domains.size(); ++i) {
      const auto& name = cfg.sweep.domains[i];
      if (std::find(names.begin(), names.end(), name) == names.end())
        throw Error(ErrorKind::UnknownName,
                    "config.sweep.domains[" + std::to_string(i) + "]: unknown gallery domain '" + name + "'");
      if (name == "random_blobs" && !cfg.seed) config_error("config.seed", "required for random_blobs");
    }
    for (std::size_t i = 0; i < cfg.sweep.n_values.size(); ++i)
      if (cfg.sweep.n_values[i] < 4) config_error("config.sweep.N[" + std::to_string(i) + "]", "must be at least 4");
  }
  if (j.contains("output")) {
    const json& o = j.at("output");
    check_object(o, "config.output", {"dir", "prefix"});
    read(o, "dir", "config.output", cfg.output.dir, string_value);
    read(o, "prefix", "config.output", cfg.output.prefix, string_value);
  }
  cfg.resolved = std::move(j);
  cfg.hash = config_hash(cfg.resolved);
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path, const ConfigOverrides& ov = {}) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open config " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::ParseError, "config " + path + ": " + e.what());
  }
  return parse_config(std::move(j), ov);
}

/// 0 success, 2 config or input error, 3 invariant or budget violation, 4 I/O.
inline int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::ConfigError:
    case ErrorKind::UnknownName:
    case ErrorKind::ParseError:
    case ErrorKind::InvalidGeometry:
    case ErrorKind::GeometryTooCoarse:
    case ErrorKind::EpsTooSmall:
    case ErrorKind::RegionOutsideGrid:
    case ErrorKind::RefinementTooCoarse:
    case ErrorKind::CrackNotInterior:
    case ErrorKind::MarginViolation:
    case ErrorKind::GeometryMismatch:
      return 2;
    case ErrorKind::IoError:
      return 4;
    default:
      return 3;
  }
}

// ---------------------------------------------------------------------------
// Output

class OutputSink {
 public:
  OutputSink(const ExperimentConfig& cfg, std::string command) : cfg_(cfg), command_(std::move(command)) {
    std::error_code ec;
    std::filesystem::create_directories(cfg.output.dir, ec);
    if (ec) throw Error(ErrorKind::IoError, "cannot create " + cfg.output.dir + ": " + ec.message());
  }

  std::string path(const std::string& name) const {
    return (std::filesystem::path(cfg_.output.dir) / (cfg_.output.prefix + name)).string();
  }

  void write_text(const std::string& name, const std::string& text) const {
    const std::string p = path(name);
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error(ErrorKind::IoError, "cannot write " + p);
    out << text;
    out.close();
    if (!out) throw Error(ErrorKind::IoError, "write failed for " + p);
    write_meta(name);
  }

  void write_json(const std::string& name, const nlohmann::json& j) const { write_text(name, j.dump(1) + "\n"); }

  /// Appends config_hash as the last column of the header and every row.
  void write_csv(const std::string& name, const std::string& header, const std::vector<std::string>& rows) const {
    std::string text = header + ",config_hash\n";
    for (const auto& r : rows) text += r + "," + cfg_.hash + "\n";
    write_text(name, text);
  }

 private:
  void write_meta(const std::string& name) const {
    const std::string p = path(name) + ".meta.json";
    nlohmann::json meta{{"file", cfg_.output.prefix + name},
                        {"command", command_},
                        {"config_hash", cfg_.hash},
                        {"version", kVersion},
                        {"timestamp", timestamp()},
                        {"config", cfg_.resolved}};
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error(ErrorKind::IoError, "cannot write " + p);
    out << meta.dump(1) << "\n";
  }

  static std::string timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
  }

  const ExperimentConfig& cfg_;
  std::string command_;
};

// ---------------------------------------------------------------------------
// Shared pieces

inline GridGeometry make_grid(const GridSpec& s) { return GridGeometry::centered(s.dim, s.n, s.half_extent, s.margin); }

inline Domain build_domain(const DomainSpec& spec) {
  if (spec.file.empty() && spec.name.empty()) throw Error(ErrorKind::ConfigError, "config.domain: required");
  if (!spec.file.empty()) return load_domain(spec.file);
  return gallery(spec.name, spec.params, make_grid(spec.grid));
}

struct ConstructionResult {
  ApproxSequence sequence;
  std::optional<SuperlevelSearch> search;  // mollify: every (eps, t) tried
  std::vector<AssemblyReport> covers;      // cover: one report per eps
};

/// Runs the configured construction.  Mollification keeps, per eps, the
/// contained superlevel set with the smallest volume gap.
inline ConstructionResult run_construction(const Domain& d, const ConstructionSpec& c) {
  ConstructionResult out;
  if (c.method == "erosion") {
    out.sequence = erosion_sequence(d, c.deltas);
  } else if (c.method == "mollify") {
    out.sequence = ApproxSequence{"mollify", d, {}};
    SuperlevelSearch all;
    for (double eps : c.eps) {
      SuperlevelSearch s = search_contained_superlevel(d, {eps}, c.t);
      if (s.found) {
        if (!all.found || s.best.volume_gap < all.best.volume_gap) {
          all.found = true;
          all.eps = s.eps;
          all.t = s.t;
          all.best = s.best;
        }
        out.sequence.steps.push_back(s.best);
      }
      for (auto& t : s.tried) all.tried.push_back(std::move(t));
    }
    out.search = std::move(all);
  } else {
    const Domain fine = refine_domain(d, c.refine);
    out.sequence = ApproxSequence{"cover", fine, {}};
    for (double eps : c.eps) {
      AssemblyOptions opt;
      opt.eps = eps;
      opt.refine = c.refine;
      opt.theta = c.theta;
      AssemblyReport rep = assemble_interior_approx(d, opt);
      ApproxStep s = make_step(fine, rep.e.voxels(), eps, 0.0, true);
      out.sequence.steps.push_back(std::move(s));
      out.covers.push_back(std::move(rep));
    }
  }
  return out;
}

/// Gap table over the contained steps; uncontained steps become error rows
/// so indices stay aligned with the sequence.
inline GapTable audit_sequence(const ApproxSequence& seq, bool certify, std::int64_t max_points) {
  ApproxSequence contained{seq.method, seq.base, {}};
  std::vector<std::size_t> index;
  for (std::size_t k = 0; k < seq.steps.size(); ++k)
    if (seq.steps[k].compactly_contained) {
      contained.steps.push_back(seq.steps[k]);
      index.push_back(k);
    }
  CrackSampling sampling;
  sampling.max_points = max_points;
  GapTable sub = gap_experiment(seq.base, contained, certify, sampling);
  GapTable out;
  out.liminf_gap = sub.liminf_gap;
  out.c_hat = sub.c_hat;
  const MeasureReport m = measure(seq.base);
  std::size_t j = 0;
  for (std::size_t k = 0; k < seq.steps.size(); ++k) {
    if (j < index.size() && index[j] == k) {
      GapRow r = std::move(sub.rows[j++]);
      r.k = k;
      out.rows.push_back(std::move(r));
      continue;
    }
    GapRow r;
    r.k = k;
    r.param = seq.steps[k].param;
    r.perimeter_e = seq.steps[k].perimeter;
    r.perimeter_omega = m.perimeter;
    r.crack_mass = m.crack_mass;
    r.gap = r.perimeter_e - m.perimeter;
    r.c_hat = m.crack_mass > 0.0 ? r.gap / m.crack_mass : 0.0;
    r.error = "step not compactly contained";
    out.rows.push_back(std::move(r));
  }
  return out;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

// ---------------------------------------------------------------------------
// Commands

inline int cmd_gen(const ExperimentConfig& cfg, std::ostream& log) {
  if (cfg.domain.name.empty()) throw Error(ErrorKind::ConfigError, "config.domain.name: gen needs a gallery name");
  const Domain d = build_domain(cfg.domain);
  OutputSink sink(cfg, "gen");
  sink.write_json("domain.json", domain_to_json(d));
  const MeasureReport m = measure(d);
  log << "P=" << format_number(m.perimeter) << ", crack=" << format_number(m.crack_mass) << "\n";
  return 0;
}

inline int cmd_measure(const ExperimentConfig& cfg, std::ostream& log) {
  const Domain d = build_domain(cfg.domain);
  const MeasureReport m = measure(d);
  const BoundaryDecomposition bd = boundary_decomposition(d);
  OutputSink sink(cfg, "measure");
  std::ostringstream row;
  row << format_number(m.volume) << ',' << format_number(m.perimeter) << ',' << format_number(m.crack_mass) << ','
      << m.boundary_face_count << ',' << m.crack_face_count << ',' << format_number(bd.reduced_mass) << ','
      << bd.skeleton.singular_points.size() << ',' << format_number(bd.skeleton.singular_mass) << ','
      << format_number(bd.skeleton.hn1_mass) << ',' << format_number(m.boundary_mass_outside_exterior) << ','
      << (bd.skeleton.exterior_boundary_empty ? "true" : "false") << ',' << (m.finite ? "true" : "false");
  sink.write_csv("measure.csv",
                 "volume,perimeter,crack_mass,boundary_faces,crack_faces,reduced_mass,singular_points,"
                 "singular_mass,singular_hn1_mass,boundary_mass_outside_exterior,exterior_boundary_empty,finite",
                 {row.str()});
  log << "volume=" << format_number(m.volume) << " P=" << format_number(m.perimeter)
      << " crack=" << format_number(m.crack_mass) << " finite=" << (m.finite ? "true" : "false") << "\n";
  return 0;
}

inline void report_density_failure(const Domain& d, const ConstructionSpec& c, const OutputSink& sink,
                                   std::ostream& log) {
  const BoundaryDecomposition bd = boundary_decomposition(d);
  const std::size_t total = bd.reduced_faces.size() + bd.crack_faces.size() + bd.skeleton.singular_points.size();
  BoundarySampling sampling;
  sampling.stride = std::max<std::int64_t>(1, static_cast<std::int64_t>(total / 4000));
  const DensityConditionReport rep = density_condition_check(d, c.density_delta, c.density_r0, sampling);
  std::vector<std::string> rows;
  for (const auto& v : rep.violations) {
    std::ostringstream os;
    os << format_number(v.x[0]) << ',' << format_number(v.x[1]) << ',' << format_number(v.x[2]) << ','
       << format_number(v.r) << ',' << format_number(v.density);
    rows.push_back(os.str());
  }
  sink.write_csv("density_violations.csv", "x,y,z,r,density", rows);
  log << "density >= " << format_number(1.0 - c.density_delta) << " at " << rep.violations.size()
      << " (sample, radius) pairs; violating face mass " << format_number(rep.violating_face_mass) << " of "
      << format_number(rep.boundary_mass) << "\n";
}

inline int cmd_approx(const ExperimentConfig& cfg, std::ostream& log) {
  const Domain d = build_domain(cfg.domain);
  OutputSink sink(cfg, "approx");
  const ConstructionResult res = run_construction(d, cfg.construction);
  const auto& c = cfg.construction;
  if (c.method == "mollify") {
    std::vector<std::string> rows;
    for (const auto& s : res.search->tried) {
      std::ostringstream os;
      os << format_number(s.param) << ',' << format_number(s.threshold) << ',' << format_number(s.volume_gap) << ','
         << format_number(s.perimeter) << ',' << (s.compactly_contained ? "true" : "false");
      rows.push_back(os.str());
    }
    sink.write_csv("mollify_search.csv", "eps,t,volume_gap,perimeter,contained", rows);
    if (res.search->found)
      log << "best contained superlevel set: eps=" << format_number(res.search->eps)
          << " t=" << format_number(res.search->t) << " P=" << format_number(res.search->best.perimeter) << "\n";
    else {
      log << "no contained superlevel set\n";
      report_density_failure(d, c, sink, log);
    }
  }
  for (std::size_t k = 0; k < res.covers.size(); ++k) {
    const auto& r = res.covers[k];
    sink.write_json("cover_" + std::to_string(k) + ".json", cover_json(r, d.dim()));
    log << "eps=" << format_number(c.eps[k]) << " P(E)=" << format_number(r.perimeter_e)
        << " bound=" << format_number(r.bound) << "\n";
  }
  sink.write_csv("approx.csv", approx_csv_header(), approx_csv_rows(res.sequence));
  sink.write_json("sequence.json", sequence_file_json(res.sequence));
  if (c.method == "erosion" && !res.sequence.steps.empty())
    log << "finest P(E)=" << format_number(res.sequence.steps.back().perimeter) << "\n";
  return 0;
}

inline int cmd_audit(const ExperimentConfig& cfg, std::ostream& log) {
  ApproxSequence seq;
  if (!cfg.audit.sequence_file.empty()) {
    std::ifstream in(cfg.audit.sequence_file);
    if (!in) throw Error(ErrorKind::IoError, "cannot open " + cfg.audit.sequence_file);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorKind::ParseError, cfg.audit.sequence_file + ": " + e.what());
    }
    seq = sequence_from_json(j);
  } else {
    seq = run_construction(build_domain(cfg.domain), cfg.construction).sequence;
  }
  OutputSink sink(cfg, "audit");
  const GapTable t = audit_sequence(seq, cfg.audit.certify, cfg.audit.max_points);
  std::vector<std::string> rows = gap_csv_rows(t);
  sink.write_csv("audit.csv", gap_csv_header(), rows);
  for (const auto& r : t.rows) {
    if (r.certificate) sink.write_json("certificate_" + std::to_string(r.k) + ".json", to_json(*r.certificate, seq.base.dim()));
    if (!r.error.empty()) log << "step " << r.k << ": " << r.error << "\n";
  }
  sink.write_json("audit_summary.json", {{"liminf_gap", t.liminf_gap},
                                         {"c_hat", t.c_hat},
                                         {"trailing_window", 3},
                                         {"spacing", seq.base.geometry().spacing()}});
  log << "liminf gap=" << format_number(t.liminf_gap) << " c_hat=" << format_number(t.c_hat) << "\n";
  return 0;
}

inline int cmd_exterior(const ExperimentConfig& cfg, std::ostream& log) {
  const Domain d = build_domain(cfg.domain);
  OutputSink sink(cfg, "exterior");
  const ApproxSequence seq = exterior_sequence(d, cfg.exterior.margin, cfg.exterior.deltas);
  sink.write_csv("exterior.csv", approx_csv_header(), approx_csv_rows(seq));
  if (!seq.steps.empty())
    log << "finest P(F)=" << format_number(seq.steps.back().perimeter)
        << " P(Omega)=" << format_number(perimeter(d.voxels())) << "\n";
  return 0;
}

inline std::size_t thread_budget() {
  std::size_t n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("PERIMETER_LAB_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) n = static_cast<std::size_t>(v);
  }
  return n;
}

inline const char* sweep_csv_header() {
  return "N,domain,k,param,P_E,P_Omega,crack_mass,gap,c_hat,certified_total,sound,error";
}

/// Rows for one (domain, N) job; failures become a single error row.
inline std::vector<std::string> sweep_job(const ExperimentConfig& cfg, const std::string& name, std::int64_t n) {
  std::vector<std::string> rows;
  const std::string prefix = std::to_string(n) + "," + name + ",";
  try {
    DomainSpec spec = cfg.domain;
    spec.name = name;
    spec.file.clear();
    spec.grid.n = n;
    const Domain d = build_domain(spec);
    const ConstructionResult res = run_construction(d, cfg.construction);
    if (res.sequence.steps.empty()) return {prefix + ",,,,,,,,," + csv_field("no contained approximation")};
    const GapTable t = audit_sequence(res.sequence, cfg.audit.certify, cfg.audit.max_points);
    const auto gap_rows = gap_csv_rows(t);
    for (std::size_t i = 0; i < gap_rows.size(); ++i) rows.push_back(prefix + gap_rows[i] + "," + csv_field(t.rows[i].error));
  } catch (const Error& e) {
    rows = {prefix + ",,,,,,,,," + csv_field(e.what())};
  }
  return rows;
}

inline int cmd_sweep(const ExperimentConfig& cfg, std::ostream& log) {
  std::vector<std::string> domains = cfg.sweep.domains;
  if (domains.empty()) {
    if (cfg.domain.name.empty()) throw Error(ErrorKind::ConfigError, "config.sweep.domains: required");
    domains.push_back(cfg.domain.name);
  }
  std::vector<std::int64_t> ns = cfg.sweep.n_values;
  if (ns.empty()) ns.push_back(cfg.domain.grid.n);
  std::vector<std::pair<std::string, std::int64_t>> jobs;
  for (const auto& name : domains)
    for (std::int64_t n : ns) jobs.emplace_back(name, n);

  OutputSink sink(cfg, "sweep");
  std::vector<std::vector<std::string>> results(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) results[i] = sweep_job(cfg, jobs[i].first, jobs[i].second);
  };
  const std::size_t workers = std::min(thread_budget(), jobs.size());
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::vector<std::string> rows;
  for (auto& r : results) rows.insert(rows.end(), r.begin(), r.end());
  sink.write_csv("sweep.csv", sweep_csv_header(), rows);
  log << jobs.size() << " jobs, " << rows.size() << " rows\n";
  return 0;
}

inline const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"gen", "measure", "approx", "audit", "exterior", "sweep"};
  return names;
}

/// Dispatches a subcommand and maps library errors to exit codes.
inline int run_command(const std::string& command, const std::string& config_path, const ConfigOverrides& ov,
                       std::ostream& log, std::ostream& err) {
  try {
    const ExperimentConfig cfg = load_config(config_path, ov);
    if (command == "gen") return cmd_gen(cfg, log);
    if (command == "measure") return cmd_measure(cfg, log);
    if (command == "approx") return cmd_approx(cfg, log);
    if (command == "audit") return cmd_audit(cfg, log);
    if (command == "exterior") return cmd_exterior(cfg, log);
    if (command == "sweep") return cmd_sweep(cfg, log);
    throw Error(ErrorKind::UnknownName, "unknown command " + command);
  } catch (const Error& e) {
    err << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    err << "IoError: " << e.what() << "\n";
    return 4;
  }
}

}  // namespace perimeter_lab
