#pragma once

// Domain file format (UTF-8 JSON):
//   {"dim":2,"cells":[N0,N1],"spacing":h,"origin":[x0,x1],
//    "occupancy_rle":[r0,r1,r2,...],"cracks":[[c0,c1,axis],...]}
// Runs alternate empty/occupied starting with empty over x-fastest cell order
// (rows along axis 0, then axis 1, then axis 2).  Crack entries name the
// canonical lower cell and the face normal axis.

#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"
#include "perimeter_lab/grid.hpp"

namespace perimeter_lab {

/// Run lengths alternating empty/occupied, starting with empty.
inline nlohmann::json occupancy_rle(const VoxelSet& vs) {
  auto runs = nlohmann::json::array();
  std::uint8_t state = 0;
  std::int64_t run = 0;
  for (const std::uint8_t v : vs.data()) {
    if (v != state) {
      runs.push_back(run);
      run = 0;
      state = v;
    }
    ++run;
  }
  runs.push_back(run);
  return runs;
}

/// Inverse of occupancy_rle; throws ParseError unless the runs cover the grid exactly.
inline VoxelSet voxels_from_rle(const GridGeometry& g, const nlohmann::json& runs) {
  if (!runs.is_array()) throw Error(ErrorKind::ParseError, "'occupancy_rle' must be an array");
  std::vector<std::uint8_t> occ;
  occ.reserve(static_cast<std::size_t>(g.cell_count()));
  std::uint8_t state = 0;
  try {
    for (std::size_t i = 0; i < runs.size(); ++i) {
      const auto len = runs[i].get<std::int64_t>();
      if (len < 0 || static_cast<std::int64_t>(occ.size()) + len > g.cell_count())
        throw Error(ErrorKind::ParseError, "occupancy run " + std::to_string(i) + " overflows the grid");
      occ.insert(occ.end(), static_cast<std::size_t>(len), state);
      state ^= 1;
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ParseError, e.what());
  }
  if (static_cast<std::int64_t>(occ.size()) != g.cell_count())
    throw Error(ErrorKind::ParseError, "occupancy runs cover " + std::to_string(occ.size()) + " of " +
                                           std::to_string(g.cell_count()) + " cells");
  return VoxelSet(g, std::move(occ));
}

inline nlohmann::json domain_to_json(const Domain& d) {
  const GridGeometry& g = d.geometry();
  nlohmann::json j;
  j["dim"] = g.dim();
  j["cells"] = nlohmann::json::array();
  j["origin"] = nlohmann::json::array();
  for (int a = 0; a < g.dim(); ++a) {
    j["cells"].push_back(g.cells(a));
    j["origin"].push_back(g.origin(a));
  }
  j["spacing"] = g.spacing();
  j["occupancy_rle"] = occupancy_rle(d.voxels());
  auto cracks = nlohmann::json::array();
  for (const Face& f : d.cracks().faces()) {
    auto e = nlohmann::json::array();
    for (int a = 0; a < g.dim(); ++a) e.push_back(f.cell[a]);
    e.push_back(f.axis);
    cracks.push_back(std::move(e));
  }
  j["cracks"] = std::move(cracks);
  return j;
}

namespace detail {

inline std::string byte_location(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col) + " (byte " + std::to_string(byte) + ")";
}

inline const nlohmann::json& require(const nlohmann::json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw Error(ErrorKind::ParseError, std::string("missing key '") + key + "'");
  return j.at(key);
}

}  // namespace detail

/// Throws ParseError for malformed content and InvariantViolation when the
/// decoded domain breaks a Domain invariant.
inline Domain domain_from_json(const nlohmann::json& j) {
  GridGeometry g;
  std::vector<std::uint8_t> occ;
  std::vector<Face> faces;
  try {
    const int dim = detail::require(j, "dim").get<int>();
    const auto& cells_j = detail::require(j, "cells");
    const auto& origin_j = detail::require(j, "origin");
    if (dim != 2 && dim != 3) throw Error(ErrorKind::ParseError, "'dim' must be 2 or 3");
    if (!cells_j.is_array() || cells_j.size() != static_cast<std::size_t>(dim) || !origin_j.is_array() ||
        origin_j.size() != static_cast<std::size_t>(dim))
      throw Error(ErrorKind::ParseError, "'cells'/'origin' length must equal dim");
    std::array<std::int64_t, kMaxDim> cells{1, 1, 1};
    Point origin{0, 0, 0};
    for (int a = 0; a < dim; ++a) {
      cells[a] = cells_j[static_cast<std::size_t>(a)].get<std::int64_t>();
      origin[a] = origin_j[static_cast<std::size_t>(a)].get<double>();
    }
    g = GridGeometry(dim, cells, detail::require(j, "spacing").get<double>(), origin);

    const VoxelSet decoded = voxels_from_rle(g, detail::require(j, "occupancy_rle"));
    occ.assign(decoded.data().begin(), decoded.data().end());

    const auto& cracks = detail::require(j, "cracks");
    if (!cracks.is_array()) throw Error(ErrorKind::ParseError, "'cracks' must be an array");
    for (std::size_t i = 0; i < cracks.size(); ++i) {
      const auto& e = cracks[i];
      if (!e.is_array() || e.size() != static_cast<std::size_t>(dim + 1))
        throw Error(ErrorKind::ParseError, "crack entry " + std::to_string(i) + " must have dim+1 integers");
      Face f;
      for (int a = 0; a < dim; ++a) f.cell[a] = e[static_cast<std::size_t>(a)].get<std::int64_t>();
      f.axis = e[static_cast<std::size_t>(dim)].get<int>();
      if (f.axis < 0 || f.axis >= dim || !g.contains(f.cell))
        throw Error(ErrorKind::InvariantViolation, "crack entry " + std::to_string(i) + " out of range");
      faces.push_back(f);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ParseError, e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::InvalidGeometry) throw Error(ErrorKind::InvariantViolation, e.what());
    throw;
  }
  try {
    return make_domain(g, VoxelSet(g, std::move(occ)), CrackSet(std::move(faces)));
  } catch (const Error& e) {
    throw Error(ErrorKind::InvariantViolation, e.what());
  }
}

inline void save_domain(const Domain& d, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::IoError, "cannot open '" + path + "' for writing");
  out << domain_to_json(d).dump() << '\n';
  if (!out) throw Error(ErrorKind::IoError, "write failed for '" + path + "'");
}

inline Domain parse_domain(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::ParseError, "at " + detail::byte_location(text, e.byte) + ": " + e.what());
  }
  return domain_from_json(j);
}

inline Domain load_domain(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_domain(ss.str());
}

}  // namespace perimeter_lab
