#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "polyvem/mesh.hpp"

namespace polyvem {

// Text format:
//   polymesh 1
//   vertices N
//   x y            (N lines)
//   cells M
//   i0 i1 i2 ...   (M lines, counterclockwise, 0-based)
// Edges and boundary flags are derived on load.

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void mesh_write(const PolygonalMesh& mesh, std::ostream& os) {
  os << "polymesh 1\n";
  os << "vertices " << mesh.num_vertices() << "\n";
  for (const auto& p : mesh.vertices()) os << format_double(p.x()) << " " << format_double(p.y()) << "\n";
  os << "cells " << mesh.num_cells() << "\n";
  for (const auto& c : mesh.cells()) {
    for (std::size_t i = 0; i < c.size(); ++i) os << (i ? " " : "") << c[i];
    os << "\n";
  }
}

inline void mesh_io_write(const PolygonalMesh& mesh, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open '" + path + "' for writing");
  mesh_write(mesh, os);
}

inline PolygonalMesh mesh_read(std::istream& is) {
  std::string line;
  int lineno = 0;
  auto next = [&]() -> std::string {
    while (std::getline(is, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r") != std::string::npos) return line;
    }
    throw ParseError("unexpected end of file", lineno + 1);
  };
  auto expect_count = [&](const std::string& keyword) {
    std::istringstream ss(next());
    std::string kw;
    long long n = -1;
    if (!(ss >> kw >> n) || kw != keyword || n < 0)
      throw ParseError("expected '" + keyword + " <count>'", lineno);
    return static_cast<std::size_t>(n);
  };
  {
    std::istringstream ss(next());
    std::string magic;
    int version = 0;
    if (!(ss >> magic >> version) || magic != "polymesh" || version != 1)
      throw ParseError("expected header 'polymesh 1'", lineno);
  }
  const std::size_t nv = expect_count("vertices");
  std::vector<Point> verts;
  verts.reserve(nv);
  for (std::size_t i = 0; i < nv; ++i) {
    std::istringstream ss(next());
    double x, y;
    std::string extra;
    if (!(ss >> x >> y) || (ss >> extra)) throw ParseError("expected 'x y'", lineno);
    verts.emplace_back(x, y);
  }
  const std::size_t nc = expect_count("cells");
  std::vector<std::vector<int>> cells;
  cells.reserve(nc);
  for (std::size_t i = 0; i < nc; ++i) {
    std::istringstream ss(next());
    std::vector<int> c;
    long long k;
    while (ss >> k) c.push_back(static_cast<int>(k));
    if (!ss.eof()) throw ParseError("malformed vertex index", lineno);
    cells.push_back(std::move(c));
  }
  try {
    return PolygonalMesh(std::move(verts), std::move(cells));
  } catch (const TopologyError&) {
    throw;
  } catch (const GeometryError& e) {
    throw TopologyError(e.what());
  }
}

inline PolygonalMesh mesh_io_read(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open '" + path + "'");
  return mesh_read(is);
}

}  // namespace polyvem
