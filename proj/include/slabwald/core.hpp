#pragma once

// Domain types for doubly periodic, dielectrically confined charge systems:
// the particle system, wall reflection factors, the image-charge series and
// the Ewald parameter set shared by every solver.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace slabwald {

/// Raised when a charge system or parameter set violates a documented invariant.
class validation_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a computation cannot produce a finite result (coincident
/// charges, non-convergent configuration, degenerate fit).
class numerical_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr double& operator[](int axis) { return axis == 0 ? x : (axis == 1 ? y : z); }
  constexpr double operator[](int axis) const { return axis == 0 ? x : (axis == 1 ? y : z); }

  constexpr Vec3& operator+=(const Vec3& o) {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
  constexpr Vec3& operator-=(const Vec3& o) {
    x -= o.x;
    y -= o.y;
    z -= o.z;
    return *this;
  }
  friend constexpr Vec3 operator+(Vec3 a, const Vec3& b) { return a += b; }
  friend constexpr Vec3 operator-(Vec3 a, const Vec3& b) { return a -= b; }
  friend constexpr Vec3 operator*(double s, const Vec3& v) { return {s * v.x, s * v.y, s * v.z}; }
  friend constexpr bool operator==(const Vec3&, const Vec3&) = default;
};

inline double norm(const Vec3& v) { return std::sqrt(v.x * v.x + v.y * v.y + v.z * v.z); }

/// Periodic cell: L_x, L_y are the lattice periods, H the slab thickness.
struct Cell {
  double Lx = 1.0;
  double Ly = 1.0;
  double H = 1.0;

  double area() const { return Lx * Ly; }
  double max_period() const { return std::max(Lx, Ly); }
  double min_period() const { return std::min(Lx, Ly); }
};

/// Point charges inside the slab 0 <= z <= H, periodic in x and y.
///
/// Construction does not enforce the physical invariants so that `validate`
/// can report on arbitrary input; every solver calls `require_valid` first.
class ChargeSystem {
 public:
  ChargeSystem() = default;
  ChargeSystem(std::vector<Vec3> positions, std::vector<double> charges, Cell cell)
      : positions_(std::move(positions)), charges_(std::move(charges)), cell_(cell) {}

  std::size_t size() const { return charges_.size(); }
  const Cell& cell() const { return cell_; }
  std::span<const Vec3> positions() const { return positions_; }
  std::span<const double> charges() const { return charges_; }
  const Vec3& position(std::size_t i) const { return positions_[i]; }
  double charge(std::size_t i) const { return charges_[i]; }

  /// Copy with particle `i` displaced by `delta` along `axis`.
  ChargeSystem displaced(std::size_t i, int axis, double delta) const {
    ChargeSystem out = *this;
    out.positions_[i][axis] += delta;
    return out;
  }

  /// Copy with every particle shifted rigidly by `shift`.
  ChargeSystem translated(const Vec3& shift) const {
    ChargeSystem out = *this;
    for (auto& p : out.positions_) p += shift;
    return out;
  }

  /// Copy with particles reordered: new particle k is old particle order[k].
  ChargeSystem permuted(std::span<const std::size_t> order) const {
    std::vector<Vec3> pos;
    std::vector<double> q;
    pos.reserve(order.size());
    q.reserve(order.size());
    for (auto k : order) {
      pos.push_back(positions_.at(k));
      q.push_back(charges_.at(k));
    }
    return {std::move(pos), std::move(q), cell_};
  }

  double max_abs_charge() const {
    double m = 0.0;
    for (double q : charges_) m = std::max(m, std::abs(q));
    return m;
  }

  double sum_squared_charges() const {
    double s = 0.0;
    for (double q : charges_) s += q * q;
    return s;
  }

 private:
  std::vector<Vec3> positions_;
  std::vector<double> charges_;
  Cell cell_;
};

struct ValidationReport {
  bool ok = true;
  std::string invariant;              // empty when ok
  std::optional<std::size_t> index;   // offending particle, when applicable
  std::string message;
  std::vector<std::string> warnings;  // non-fatal findings (charges on an interface)

  explicit operator bool() const { return ok; }
};

/// Checks every ChargeSystem invariant. Reports the first violation found.
inline ValidationReport validate(const ChargeSystem& system) {
  ValidationReport report;
  auto fail = [&](std::string invariant, std::optional<std::size_t> index, std::string message) {
    report.ok = false;
    report.invariant = std::move(invariant);
    report.index = index;
    report.message = std::move(message);
    return report;
  };

  const Cell& cell = system.cell();
  if (!(cell.Lx > 0.0) || !(cell.Ly > 0.0) || !(cell.H > 0.0) || !std::isfinite(cell.Lx) ||
      !std::isfinite(cell.Ly) || !std::isfinite(cell.H)) {
    return fail("cell", std::nullopt, "cell lengths must be positive and finite");
  }
  if (system.positions().size() != system.charges().size()) {
    return fail("size", std::nullopt, "positions and charges differ in length");
  }
  if (system.size() == 0) {
    return fail("size", std::nullopt, "system holds no particles");
  }
  for (std::size_t i = 0; i < system.size(); ++i) {
    const Vec3& r = system.position(i);
    if (!std::isfinite(r.x) || !std::isfinite(r.y) || !std::isfinite(r.z) ||
        !std::isfinite(system.charge(i))) {
      return fail("finite", i, "non-finite coordinate or charge");
    }
  }

  double total = 0.0;
  for (double q : system.charges()) total += q;
  const double tolerance = 1e-12 * system.max_abs_charge();
  if (std::abs(total) > tolerance) {
    std::ostringstream msg;
    msg << "net charge " << total << " exceeds neutrality tolerance " << tolerance;
    return fail("neutrality", std::nullopt, msg.str());
  }

  for (std::size_t i = 0; i < system.size(); ++i) {
    const double z = system.position(i).z;
    if (z < 0.0 || z > cell.H) {
      std::ostringstream msg;
      msg << "particle " << i << " at z=" << z << " lies outside [0, " << cell.H << "]";
      return fail("confinement", i, msg.str());
    }
    if (z == 0.0 || z == cell.H) {
      std::ostringstream msg;
      msg << "particle " << i << " sits on an interface (z=" << z
          << "); its first image coincides with it";
      report.warnings.push_back(msg.str());
    }
  }
  return report;
}

inline void require_valid(const ChargeSystem& system) {
  auto report = validate(system);
  if (!report.ok) throw validation_error(report.invariant + ": " + report.message);
}

/// Reflection factors of the upper (z = H) and lower (z = 0) interfaces.
struct DielectricSpec {
  double gamma_u = 0.0;
  double gamma_d = 0.0;

  DielectricSpec() = default;
  DielectricSpec(double gu, double gd) : gamma_u(gu), gamma_d(gd) {
    if (!(std::abs(gu) <= 1.0) || !(std::abs(gd) <= 1.0)) {
      throw std::domain_error("reflection factors must satisfy |gamma| <= 1");
    }
  }

  bool homogeneous() const { return gamma_u == 0.0 && gamma_d == 0.0; }
};

/// Reflection factors from permittivities. Pass +infinity for an ideal
/// metal; it maps to exactly -1.
inline DielectricSpec reflection_factors(double eps_u, double eps_c, double eps_d) {
  if (!(eps_c > 0.0) || !std::isfinite(eps_c)) {
    throw std::domain_error("slab permittivity must be positive and finite");
  }
  auto gamma = [eps_c](double eps_out) {
    if (std::isinf(eps_out) && eps_out > 0.0) return -1.0;
    if (!(eps_out > 0.0)) throw std::domain_error("permittivities must be positive");
    return (eps_c - eps_out) / (eps_c + eps_out);
  };
  return {gamma(eps_u), gamma(eps_d)};
}

enum class Side { plus, minus };

inline double int_pow(double base, int exponent) {
  double r = 1.0;
  for (int k = 0; k < exponent; ++k) r *= base;
  return r;
}

/// One level of the reflected image series. Its z-coordinate is the affine
/// image `sign * z + offset` of the source's z; x and y are unchanged.
struct ImageCharge {
  int level = 0;  // 0 denotes the source itself
  Side side = Side::plus;
  double scale = 1.0;
  int sign = 1;  // (-1)^level
  double offset = 0.0;

  double map(double z) const { return sign * z + offset; }
};

/// Image of level l on the given side, unpruned.
inline ImageCharge make_image(const DielectricSpec& spec, double H, int level, Side side) {
  const int up = (level + 1) / 2;  // ceil(l/2)
  const int dn = level / 2;        // floor(l/2)
  ImageCharge img;
  img.level = level;
  img.side = side;
  img.sign = (level % 2 == 0) ? 1 : -1;
  if (side == Side::plus) {
    img.scale = int_pow(spec.gamma_d, up) * int_pow(spec.gamma_u, dn);
    img.offset = 2.0 * up * H;
  } else {
    img.scale = int_pow(spec.gamma_d, dn) * int_pow(spec.gamma_u, up);
    img.offset = -2.0 * dn * H;
  }
  return img;
}

/// Image levels 1..M (plus side first within a level). Levels whose scale is
/// exactly zero are dropped.
inline std::vector<ImageCharge> image_levels(const DielectricSpec& spec, double H, int M) {
  if (M < 0) throw std::domain_error("image truncation level must be >= 0");
  std::vector<ImageCharge> out;
  for (int l = 1; l <= M; ++l) {
    for (Side side : {Side::plus, Side::minus}) {
      auto img = make_image(spec, H, l, side);
      if (img.scale != 0.0) out.push_back(img);
    }
  }
  return out;
}

/// Source (level 0) followed by the image levels 1..M.
inline std::vector<ImageCharge> source_and_images(const DielectricSpec& spec, double H, int M) {
  std::vector<ImageCharge> out{ImageCharge{}};
  auto images = image_levels(spec, H, M);
  out.insert(out.end(), images.begin(), images.end());
  return out;
}

struct ImageEntry {
  std::size_t source = 0;
  double charge = 0.0;
  Vec3 position;
  int level = 0;
  Side side = Side::plus;
};

/// Materialized image charges, level-major so that the list for M is a prefix
/// of the list for any larger M.
inline std::vector<ImageEntry> image_series(const ChargeSystem& system, const DielectricSpec& spec,
                                            int M) {
  const auto levels = image_levels(spec, system.cell().H, M);
  std::vector<ImageEntry> out;
  out.reserve(levels.size() * system.size());
  std::size_t k = 0;
  while (k < levels.size()) {
    std::size_t end = k;
    while (end < levels.size() && levels[end].level == levels[k].level) ++end;
    for (std::size_t j = 0; j < system.size(); ++j) {
      for (std::size_t t = k; t < end; ++t) {
        const auto& img = levels[t];
        const Vec3& r = system.position(j);
        out.push_back({j, img.scale * system.charge(j), {r.x, r.y, img.map(r.z)}, img.level,
                       img.side});
      }
    }
    k = end;
  }
  return out;
}

/// Fourth-order central difference f'(0) from f(+-h) and f(+-2h).
template <class F>
double central_derivative(F&& f, double h) {
  return (8.0 * (f(h) - f(-h)) - (f(2.0 * h) - f(-2.0 * h))) / (12.0 * h);
}

/// Full tunable parameter set. r_c = s/alpha and k_c = 2 s alpha by construction.
struct EwaldParams {
  double alpha = 1.0;
  double r_c = 6.0;
  double k_c = 12.0;
  double s = 6.0;
  double L_z = 0.0;
  int M = 0;

  static EwaldParams from_splitting(double s, double alpha, double L_z, int M) {
    if (!(s > 0.0) || !(alpha > 0.0)) {
      throw validation_error("splitting parameter s and alpha must be positive");
    }
    if (M < 0) throw validation_error("image truncation level M must be >= 0");
    EwaldParams p;
    p.alpha = alpha;
    p.s = s;
    p.r_c = s / alpha;
    p.k_c = 2.0 * s * alpha;
    p.L_z = L_z;
    p.M = M;
    return p;
  }

  EwaldParams with_M(int m) const { return from_splitting(s, alpha, L_z, m); }
  EwaldParams with_Lz(double lz) const { return from_splitting(s, alpha, lz, M); }
  EwaldParams with_alpha(double a) const { return from_splitting(s, a, L_z, M); }
};

/// Total energy, per-particle forces and the per-term energy breakdown.
struct EnergyForces {
  double energy = 0.0;
  std::vector<Vec3> forces;
  std::map<std::string, double> breakdown;
  std::vector<std::string> warnings;

  /// Recomputes `energy` as the sum of the breakdown terms.
  void total_from_breakdown() {
    energy = 0.0;
    for (const auto& [name, value] : breakdown) energy += value;
  }

  EnergyForces& operator+=(const EnergyForces& o) {
    energy += o.energy;
    if (forces.size() < o.forces.size()) forces.resize(o.forces.size());
    for (std::size_t i = 0; i < o.forces.size(); ++i) forces[i] += o.forces[i];
    for (const auto& [name, value] : o.breakdown) breakdown[name] += value;
    warnings.insert(warnings.end(), o.warnings.begin(), o.warnings.end());
    return *this;
  }
};

}  // namespace slabwald
