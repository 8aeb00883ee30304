#pragma once

// Plain-text system files:
//
//   cell Lx Ly H
//   x y z q
//   ...
//
// Whitespace separated, '#' starts a comment.

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "core.hpp"

namespace slabwald {

inline ChargeSystem read_system(std::istream& in) {
  std::string line;
  bool have_cell = false;
  Cell cell;
  std::vector<Vec3> pos;
  std::vector<double> q;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string first;
    if (!(ls >> first)) continue;
    auto bad = [&](const char* what) {
      return validation_error("line " + std::to_string(lineno) + ": " + what);
    };
    if (first == "cell") {
      if (have_cell) throw bad("duplicate cell header");
      if (!(ls >> cell.Lx >> cell.Ly >> cell.H)) throw bad("expected 'cell Lx Ly H'");
      have_cell = true;
    } else {
      if (!have_cell) throw bad("particle listed before the cell header");
      Vec3 r;
      double charge;
      std::istringstream ps(line);
      if (!(ps >> r.x >> r.y >> r.z >> charge)) throw bad("expected 'x y z q'");
      pos.push_back(r);
      q.push_back(charge);
    }
    std::string extra;
    if (first == "cell" && (ls >> extra)) throw bad("trailing tokens");
  }
  if (!have_cell) throw validation_error("missing 'cell Lx Ly H' header");
  return {std::move(pos), std::move(q), cell};
}

inline ChargeSystem read_system_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw validation_error("cannot open system file '" + path + "'");
  return read_system(in);
}

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_system(std::ostream& out, const ChargeSystem& system) {
  const Cell& c = system.cell();
  out << "cell " << format_double(c.Lx) << ' ' << format_double(c.Ly) << ' '
      << format_double(c.H) << '\n';
  for (std::size_t i = 0; i < system.size(); ++i) {
    const Vec3& r = system.position(i);
    out << format_double(r.x) << ' ' << format_double(r.y) << ' ' << format_double(r.z) << ' '
        << format_double(system.charge(i)) << '\n';
  }
}

}  // namespace slabwald
