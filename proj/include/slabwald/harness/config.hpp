#pragma once

// Sweep scenarios in a flat key = value format with [name] sections:
//
//   [gamma1_H0.5]
//   Lx = 10
//   Ly = 10
//   H = 0.5
//   gamma_u = 1
//   gamma_d = 1
//   sweep = M              # M, P or Lz
//   values = 1:40          # a:b, a:b:step, or a comma list
//   approx = ewald2d       # ewald2d (truncated image series) or ewald3d
//   quantity = force       # force or energy
//   yb = on                # ewald3d only
//   elc = off              # ewald3d only
//   s = 6
//   P = 3                  # fixed padding ratio for M sweeps (or Lz = ...)
//   M = 0                  # fixed truncation for P and Lz sweeps
//   alpha = 1.2            # optional, overrides the default policy
//   seed = 1
//   composition = 13:2,26:-1
//
// Blank lines and '#' comments are ignored.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "../core.hpp"
#include "generate.hpp"

namespace slabwald::harness {

enum class SweepVar { M, P, Lz };
enum class Approx { ewald2d, ewald3d };
enum class Quantity { energy, force };

inline std::string to_string(SweepVar v) {
  switch (v) {
    case SweepVar::M: return "M";
    case SweepVar::P: return "P";
    case SweepVar::Lz: return "Lz";
  }
  return "?";
}

struct SweepConfig {
  std::string name = "scenario";
  Cell cell{10.0, 10.0, 1.0};
  DielectricSpec spec;
  SweepVar sweep = SweepVar::M;
  std::vector<double> values;
  Approx approx = Approx::ewald2d;
  Quantity quantity = Quantity::force;
  bool yb = true;
  bool elc = false;
  double s = 6.0;
  int M = 0;
  std::optional<double> P;
  std::optional<double> Lz;
  std::optional<double> alpha;
  std::uint64_t seed = 1;
  Composition composition = default_composition();

  void check() const {
    if (!(cell.Lx > 0.0) || !(cell.Ly > 0.0) || !(cell.H > 0.0)) {
      throw validation_error(name + ": cell lengths must be positive");
    }
    if (values.empty()) throw validation_error(name + ": empty value grid");
    for (std::size_t k = 1; k < values.size(); ++k) {
      if (!(values[k] > values[k - 1])) {
        throw validation_error(name + ": value grid must be strictly increasing");
      }
    }
    if (sweep == SweepVar::M) {
      for (double v : values) {
        if (v < 0.0 || v != std::floor(v)) {
          throw validation_error(name + ": M values must be non-negative integers");
        }
      }
      if (approx == Approx::ewald3d && !P && !Lz) {
        throw validation_error(name + ": an M sweep with ewald3d needs a fixed P or Lz");
      }
    } else if (approx == Approx::ewald2d) {
      throw validation_error(name + ": P and Lz sweeps need approx = ewald3d");
    }
    double total = 0.0, qmax = 0.0;
    for (const auto& sp : composition) {
      total += sp.count * sp.valence;
      qmax = std::max(qmax, std::abs(sp.valence));
    }
    if (std::abs(total) > 1e-12 * qmax) throw validation_error(name + ": composition not neutral");
    if (!(s > 0.0)) throw validation_error(name + ": s must be positive");
  }

  /// Padded height for a grid value (or the fixed one for M sweeps).
  double Lz_for(double value) const {
    switch (sweep) {
      case SweepVar::P: return cell.H + value * cell.Lx;
      case SweepVar::Lz: return value;
      case SweepVar::M: break;
    }
    if (Lz) return *Lz;
    if (P) return cell.H + *P * cell.Lx;
    return 0.0;
  }

  int M_for(double value) const {
    return sweep == SweepVar::M ? static_cast<int>(value) : M;
  }
};

/// Parses "a:b", "a:b:step" or "v1, v2, ...".
inline std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> out;
  try {
    if (text.find(':') != std::string::npos) {
      std::vector<double> parts;
      std::stringstream ss(text);
      std::string item;
      while (std::getline(ss, item, ':')) parts.push_back(std::stod(item));
      if (parts.size() < 2 || parts.size() > 3) throw validation_error("bad range '" + text + "'");
      const double step = parts.size() == 3 ? parts[2] : 1.0;
      if (!(step > 0.0)) throw validation_error("range step must be positive");
      const long count = static_cast<long>(std::floor((parts[1] - parts[0]) / step + 1e-9));
      for (long k = 0; k <= count; ++k) out.push_back(parts[0] + k * step);
    } else {
      std::stringstream ss(text);
      std::string item;
      while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
    }
  } catch (const std::logic_error& e) {
    if (auto v = dynamic_cast<const validation_error*>(&e)) throw *v;
    throw validation_error("cannot parse value grid '" + text + "'");
  }
  return out;
}

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "on" || v == "true" || v == "1" || v == "yes") return true;
  if (v == "off" || v == "false" || v == "0" || v == "no") return false;
  throw validation_error("key '" + key + "' expects on/off, got '" + v + "'");
}

inline double parse_number(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::logic_error&) {
    throw validation_error("key '" + key + "' expects a number, got '" + v + "'");
  }
}

inline SweepConfig build(const std::string& name, const std::map<std::string, std::string>& kv) {
  SweepConfig c;
  c.name = name;
  double gu = 0.0, gd = 0.0;
  bool have_values = false;
  for (const auto& [key, v] : kv) {
    if (key == "Lx") c.cell.Lx = parse_number(key, v);
    else if (key == "Ly") c.cell.Ly = parse_number(key, v);
    else if (key == "H") c.cell.H = parse_number(key, v);
    else if (key == "gamma_u") gu = parse_number(key, v);
    else if (key == "gamma_d") gd = parse_number(key, v);
    else if (key == "sweep") {
      if (v == "M") c.sweep = SweepVar::M;
      else if (v == "P") c.sweep = SweepVar::P;
      else if (v == "Lz") c.sweep = SweepVar::Lz;
      else throw validation_error("sweep must be M, P or Lz");
    } else if (key == "values") {
      c.values = parse_grid(v);
      have_values = true;
    } else if (key == "approx") {
      if (v == "ewald2d") c.approx = Approx::ewald2d;
      else if (v == "ewald3d") c.approx = Approx::ewald3d;
      else throw validation_error("approx must be ewald2d or ewald3d");
    } else if (key == "quantity") {
      if (v == "energy") c.quantity = Quantity::energy;
      else if (v == "force") c.quantity = Quantity::force;
      else throw validation_error("quantity must be energy or force");
    } else if (key == "yb") c.yb = parse_bool(key, v);
    else if (key == "elc") c.elc = parse_bool(key, v);
    else if (key == "s") c.s = parse_number(key, v);
    else if (key == "M") {
      const double m = parse_number(key, v);
      if (m < 0 || m != std::floor(m)) throw validation_error("M must be a non-negative integer");
      c.M = static_cast<int>(m);
    } else if (key == "P") c.P = parse_number(key, v);
    else if (key == "Lz") c.Lz = parse_number(key, v);
    else if (key == "alpha") c.alpha = parse_number(key, v);
    else if (key == "seed") {
      try {
        c.seed = std::stoull(v);
      } catch (const std::logic_error&) {
        throw validation_error("seed must be a non-negative integer");
      }
    } else if (key == "composition") c.composition = parse_composition(v);
    else throw validation_error("[" + name + "] unknown key '" + key + "'");
  }
  if (!have_values) throw validation_error("[" + name + "] missing 'values'");
  try {
    c.spec = DielectricSpec(gu, gd);
  } catch (const std::domain_error& e) {
    throw validation_error(e.what());
  }
  c.check();
  return c;
}

}  // namespace detail

inline std::vector<SweepConfig> parse_config(std::istream& in) {
  std::vector<SweepConfig> out;
  std::string line, section;
  std::map<std::string, std::string> kv;
  std::set<std::string> seen;
  bool open = false;
  int lineno = 0;
  auto flush = [&] {
    if (open) out.push_back(detail::build(section, kv));
    kv.clear();
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw validation_error("line " + std::to_string(lineno) + ": unterminated section header");
      }
      flush();
      section = detail::trim(line.substr(1, line.size() - 2));
      if (section.empty()) throw validation_error("line " + std::to_string(lineno) + ": empty section name");
      if (!seen.insert(section).second) throw validation_error("duplicate section [" + section + "]");
      open = true;
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos || !open) {
      throw validation_error("line " + std::to_string(lineno) + ": expected key = value inside a section");
    }
    const std::string key = detail::trim(line.substr(0, eq));
    if (kv.count(key)) throw validation_error("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    kv[key] = detail::trim(line.substr(eq + 1));
  }
  flush();
  if (out.empty()) throw validation_error("config holds no [scenario] sections");
  return out;
}

inline std::vector<SweepConfig> parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw validation_error("cannot open config file '" + path + "'");
  return parse_config(in);
}

}  // namespace slabwald::harness
