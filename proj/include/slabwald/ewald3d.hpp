#pragma once

// Slab electrostatics through a triply periodic Ewald sum on a box padded to
// height L_z, plus the dipole (YB) and layer (ELC) corrections that map it
// back onto the doubly periodic image-charge sum.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "core.hpp"
#include "ewald2d.hpp"
#include "parallel.hpp"
#include "reciprocal.hpp"

namespace slabwald::ewald3d {

struct CorrectionFlags {
  bool include_yb = true;
  bool include_elc = true;
};

struct KVector3D {
  int nx = 0;
  int ny = 0;
  int nz = 0;
  Vec3 k;
  double magnitude = 0.0;
};

/// rho_k = sum_i q_i e^{i k.r_i} and rho~_k = sum over sources and images
/// of q e^{-i k.r}, on the half space of k (the other half is conjugate).
struct StructureFactors {
  std::vector<KVector3D> k;
  std::vector<std::complex<double>> rho;
  std::vector<std::complex<double>> rho_tilde;
};

namespace detail {

inline void require_padding(const ChargeSystem& system, const EwaldParams& params) {
  if (!(params.L_z > system.cell().H)) {
    throw validation_error("padded height L_z must exceed the slab thickness H");
  }
}

inline std::vector<ImageCharge> all_templates(const DielectricSpec& spec, double H, int M) {
  return source_and_images(spec, H, M);
}

struct Grid {
  double kx0, ky0, kz0;
  int nx, ny, nz;
  double k2_max;
};

inline Grid grid_for(const Cell& cell, const EwaldParams& params) {
  Grid g;
  g.kx0 = 2.0 * std::numbers::pi / cell.Lx;
  g.ky0 = 2.0 * std::numbers::pi / cell.Ly;
  g.kz0 = 2.0 * std::numbers::pi / params.L_z;
  g.nx = static_cast<int>(std::ceil(params.k_c / g.kx0));
  g.ny = static_cast<int>(std::ceil(params.k_c / g.ky0));
  g.nz = static_cast<int>(std::ceil(params.k_c / g.kz0));
  const double lim = params.k_c * (1.0 + 1e-12);
  g.k2_max = lim * lim;
  return g;
}

// Tables of e^{i n k0 x_j} for n in [-m, m], stored at [j * (2m+1) + n + m].
inline std::vector<std::complex<double>> phase_table(const ChargeSystem& system, int axis,
                                                     double k0, int m) {
  const std::size_t w = 2 * m + 1;
  std::vector<std::complex<double>> t(system.size() * w);
  for (std::size_t j = 0; j < system.size(); ++j) {
    const double x = system.position(j)[axis];
    for (int n = -m; n <= m; ++n) t[j * w + n + m] = std::polar(1.0, n * k0 * x);
  }
  return t;
}

struct ZTables {
  std::vector<std::complex<double>> Z;   // sum_t scale e^{-i kz (sigma z + c)}
  std::vector<std::complex<double>> Zp;  // same with an extra factor sigma
};

inline ZTables z_tables(const ChargeSystem& system, const std::vector<ImageCharge>& templates,
                        double kz0, int m) {
  const std::size_t w = 2 * m + 1;
  ZTables t;
  t.Z.assign(system.size() * w, {0.0, 0.0});
  t.Zp.assign(system.size() * w, {0.0, 0.0});
  for (std::size_t j = 0; j < system.size(); ++j) {
    const double z = system.position(j).z;
    for (int n = -m; n <= m; ++n) {
      std::complex<double> s{0.0, 0.0}, sp{0.0, 0.0};
      for (const auto& img : templates) {
        const auto e = std::polar(img.scale, -n * kz0 * img.map(z));
        s += e;
        sp += static_cast<double>(img.sign) * e;
      }
      t.Z[j * w + n + m] = s;
      t.Zp[j * w + n + m] = sp;
    }
  }
  return t;
}

// Half space: nx > 0, or nx = 0 and ny > 0, or nx = ny = 0 and nz > 0.
inline bool in_half_space(int nx, int ny, int nz) {
  return nx > 0 || (nx == 0 && (ny > 0 || (ny == 0 && nz > 0)));
}

struct FourierResult {
  double energy = 0.0;
  std::vector<Vec3> grad;
};

inline FourierResult fourier_sum(const ChargeSystem& system, const DielectricSpec& spec,
                                 const EwaldParams& params, bool want_forces) {
  const Cell& cell = system.cell();
  const std::size_t n = system.size();
  const Grid g = grid_for(cell, params);
  const auto templates = all_templates(spec, cell.H, params.M);
  const auto ex = phase_table(system, 0, g.kx0, g.nx);
  const auto ey = phase_table(system, 1, g.ky0, g.ny);
  const auto ez = phase_table(system, 2, g.kz0, g.nz);
  const ZTables zt = z_tables(system, templates, g.kz0, g.nz);
  const std::size_t wx = 2 * g.nx + 1, wy = 2 * g.ny + 1, wz = 2 * g.nz + 1;
  const double four_alpha2 = 4.0 * params.alpha * params.alpha;
  const double volume = cell.area() * params.L_z;
  const double pref = 2.0 * std::numbers::pi / volume;

  // One slot per nx, reduced in order afterwards.
  std::vector<FourierResult> slots(g.nx + 1);
  parallel_for(slots.size(), [&](std::size_t ix) {
    const int nx = static_cast<int>(ix);
    FourierResult& out = slots[ix];
    if (want_forces) out.grad.assign(n, Vec3{});
    std::vector<std::complex<double>> exy(n);
    const double kx = nx * g.kx0;
    for (int ny = -g.ny; ny <= g.ny; ++ny) {
      if (nx == 0 && ny < 0) continue;
      const double ky = ny * g.ky0;
      const double kxy2 = kx * kx + ky * ky;
      if (kxy2 > g.k2_max) continue;
      for (std::size_t j = 0; j < n; ++j) exy[j] = ex[j * wx + nx + g.nx] * ey[j * wy + ny + g.ny];
      for (int nz = -g.nz; nz <= g.nz; ++nz) {
        if (!in_half_space(nx, ny, nz)) continue;
        const double kz = nz * g.kz0;
        const double k2 = kxy2 + kz * kz;
        if (k2 > g.k2_max) continue;
        const double f = std::exp(-k2 / four_alpha2) / k2;
        std::complex<double> rho{0.0, 0.0}, rho_t{0.0, 0.0};
        for (std::size_t j = 0; j < n; ++j) {
          const double q = system.charge(j);
          rho += q * exy[j] * ez[j * wz + nz + g.nz];
          rho_t += q * std::conj(exy[j]) * zt.Z[j * wz + nz + g.nz];
        }
        out.energy += 2.0 * f * (rho * rho_t).real();
        if (!want_forces) continue;
        const std::complex<double> I{0.0, 1.0};
        for (std::size_t a = 0; a < n; ++a) {
          const double q = system.charge(a);
          const auto own = I * q * exy[a] * ez[a * wz + nz + g.nz] * rho_t;
          const auto cross = -I * rho * q * std::conj(exy[a]);
          const auto Z = zt.Z[a * wz + nz + g.nz];
          const auto Zp = zt.Zp[a * wz + nz + g.nz];
          out.grad[a].x += 2.0 * f * (kx * (own + cross * Z)).real();
          out.grad[a].y += 2.0 * f * (ky * (own + cross * Z)).real();
          out.grad[a].z += 2.0 * f * (kz * (own + cross * Zp)).real();
        }
      }
    }
  });

  FourierResult total;
  if (want_forces) total.grad.assign(n, Vec3{});
  std::vector<double> parts;
  for (const auto& s : slots) {
    parts.push_back(s.energy);
    if (want_forces) {
      for (std::size_t a = 0; a < n; ++a) total.grad[a] += s.grad[a];
    }
  }
  total.energy = pref * compensated_sum(parts);
  for (auto& v : total.grad) v = pref * v;
  return total;
}

}  // namespace detail

/// Structure factors on the half space 0 < |k| <= k_c.
inline StructureFactors structure_factors(const ChargeSystem& system, const DielectricSpec& spec,
                                          const EwaldParams& params) {
  const Cell& cell = system.cell();
  const auto g = detail::grid_for(cell, params);
  const auto templates = detail::all_templates(spec, cell.H, params.M);
  StructureFactors sf;
  for (int nx = 0; nx <= g.nx; ++nx) {
    for (int ny = -g.ny; ny <= g.ny; ++ny) {
      for (int nz = -g.nz; nz <= g.nz; ++nz) {
        if (!detail::in_half_space(nx, ny, nz)) continue;
        const Vec3 k{nx * g.kx0, ny * g.ky0, nz * g.kz0};
        const double k2 = k.x * k.x + k.y * k.y + k.z * k.z;
        if (k2 > g.k2_max) continue;
        std::complex<double> rho{0.0, 0.0}, rho_t{0.0, 0.0};
        for (std::size_t j = 0; j < system.size(); ++j) {
          const Vec3& r = system.position(j);
          const double q = system.charge(j);
          rho += std::polar(q, k.x * r.x + k.y * r.y + k.z * r.z);
          for (const auto& t : templates) {
            rho_t += std::polar(q * t.scale, -(k.x * r.x + k.y * r.y + k.z * t.map(r.z)));
          }
        }
        sf.k.push_back({nx, ny, nz, k, std::sqrt(k2)});
        sf.rho.push_back(rho);
        sf.rho_tilde.push_back(rho_t);
      }
    }
  }
  return sf;
}

/// Reciprocal part of the padded-box Ewald sum with the image-augmented
/// structure factor, plus the self term.
inline EnergyForces fourier3d_energy(const ChargeSystem& system, const DielectricSpec& spec,
                                     const EwaldParams& params) {
  detail::require_padding(system, params);
  const auto r = detail::fourier_sum(system, spec, params, true);
  EnergyForces out;
  out.breakdown["fourier3d"] = r.energy;
  out.breakdown["self"] = -params.alpha / std::sqrt(std::numbers::pi) * system.sum_squared_charges();
  out.total_from_breakdown();
  out.forces.resize(system.size());
  for (std::size_t a = 0; a < system.size(); ++a) out.forces[a] = -1.0 * r.grad[a];
  return out;
}

/// (2 pi / V) (sum_i q_i z_i) sum_j q_j [z_j + sum_images scale z_image].
inline EnergyForces yb_correction(const ChargeSystem& system, const DielectricSpec& spec,
                                  const EwaldParams& params) {
  detail::require_padding(system, params);
  const auto images = image_levels(spec, system.cell().H, params.M);
  const double pref = 2.0 * std::numbers::pi / (system.cell().area() * params.L_z);
  double sigma_sum = 1.0;
  for (const auto& t : images) sigma_sum += t.scale * t.sign;
  std::vector<double> a_parts, b_parts;
  for (std::size_t j = 0; j < system.size(); ++j) {
    const double q = system.charge(j);
    const double z = system.position(j).z;
    a_parts.push_back(q * z);
    b_parts.push_back(q * z);
    for (const auto& t : images) b_parts.push_back(q * t.scale * t.map(z));
  }
  const double A = compensated_sum(a_parts);
  const double B = compensated_sum(b_parts);
  EnergyForces out;
  out.breakdown["yb"] = pref * A * B;
  out.total_from_breakdown();
  out.forces.resize(system.size());
  for (std::size_t a = 0; a < system.size(); ++a) {
    const double q = system.charge(a);
    out.forces[a] = Vec3{0.0, 0.0, -pref * (q * B + A * q * sigma_sum)};
  }
  return out;
}

/// Wave-number cutoff of the layer correction: the largest retained term
/// e^{-h (L_z - (M+1) H)} stays above 1e-18.
inline double elc_h_max(const ChargeSystem& system, const DielectricSpec& spec,
                        const EwaldParams& params, bool* diverges = nullptr) {
  const auto images = image_levels(spec, system.cell().H, params.M);
  int top = 0;
  for (const auto& t : images) top = std::max(top, t.level);
  const double buffer = params.L_z - (top + 1) * system.cell().H;
  if (diverges) *diverges = !(buffer > 0.0);
  if (!(buffer > 0.0)) return params.k_c;
  return std::log(1e18) / buffer;
}

struct ElcKernel {
  double value = 0.0;
  double dz = 0.0;  // d/dd
};

/// cosh(h d) / (1 - e^{h L_z}) and its derivative in d, written with
/// decaying exponentials only; finite for any h L_z when |d| <= L_z.
inline ElcKernel elc_kernel(double h, double d, double Lz) {
  const double up = std::exp(h * (d - Lz));
  const double dn = std::exp(-h * (d + Lz));
  const double den = 2.0 * -std::expm1(-h * Lz);
  return {-(up + dn) / den, -h * (up - dn) / den};
}

namespace detail {

inline EnergyForces elc_impl(const ChargeSystem& system, const DielectricSpec& spec,
                             const EwaldParams& params, bool want_forces) {
  require_padding(system, params);
  const Cell& cell = system.cell();
  const std::size_t n = system.size();
  const auto templates = all_templates(spec, cell.H, params.M);
  EnergyForces out;
  bool diverges = false;
  const double h_max = elc_h_max(system, spec, params, &diverges);
  if (diverges) {
    std::ostringstream msg;
    msg << "layer correction: L_z=" << params.L_z << " does not exceed (M+1)H; the series is "
        << "summed only up to k_c and is not converged";
    out.warnings.push_back(msg.str());
  }
  const ReciprocalShells shells = ReciprocalShells::build(cell, h_max);
  const PhaseTables phases(system, shells.kx0, shells.ky0, shells.a_max, shells.b_max);
  const double Lz = params.L_z;
  const double pref = 2.0 * std::numbers::pi / cell.area();

  struct Row {
    double energy = 0.0;
    Vec3 grad;
  };
  std::vector<Row> rows(n);
  parallel_for(n, [&](std::size_t i) {
    std::vector<double> cx, sx, cy, sy;
    ShellSums sums;
    std::vector<double> parts;
    Row& row = rows[i];
    const std::size_t n_shells = shells.shell_count();
    for (std::size_t j = 0; j < n; ++j) {
      phases.pair_x(i, j, cx, sx);
      phases.pair_y(i, j, cy, sy);
      sums.compute(shells, cx, sx, cy, sy, n_shells);
      const double qq = system.charge(i) * system.charge(j);
      double e = 0.0;
      Vec3 g{};
      double gj_z = 0.0;
      for (const auto& t : templates) {
        const double d = system.position(i).z - t.map(system.position(j).z);
        double et = 0.0, gx = 0.0, gy = 0.0, gz = 0.0;
        for (std::size_t s = 0; s < n_shells; ++s) {
          const double h = shells.shell_h[s];
          const ElcKernel k = elc_kernel(h, d, Lz);
          const double inv_h = 1.0 / h;
          et += sums.C[s] * inv_h * k.value;
          if (want_forces) {
            gx += sums.Dx[s] * inv_h * k.value;
            gy += sums.Dy[s] * inv_h * k.value;
            gz += sums.C[s] * inv_h * k.dz;
          }
        }
        e += t.scale * et;
        g += t.scale * Vec3{gx, gy, gz};
        gj_z -= t.sign * t.scale * gz;
      }
      parts.push_back(qq * e);
      if (want_forces) {
        if (j == i) {
          row.grad.z += qq * (g.z + gj_z);
        } else {
          row.grad += (2.0 * qq) * g;
        }
      }
    }
    row.energy = compensated_sum(parts);
  });

  std::vector<double> parts;
  for (const auto& r : rows) parts.push_back(r.energy);
  out.breakdown["elc"] = pref * compensated_sum(parts);
  out.total_from_breakdown();
  if (want_forces) {
    out.forces.resize(n);
    for (std::size_t a = 0; a < n; ++a) out.forces[a] = -pref * rows[a].grad;
  }
  return out;
}

}  // namespace detail

/// (2 pi / A) sum_ij q_i q_j sum_{h != 0} cos(h.rho_ij)/h
///   [cosh(h z_ij) + image terms] / (1 - e^{h L_z}),
/// evaluated as decaying exponentials only.
inline EnergyForces elc_correction(const ChargeSystem& system, const DielectricSpec& spec,
                                   const EwaldParams& params) {
  return detail::elc_impl(system, spec, params, true);
}

/// Magnitude e^{-alpha^2 (L_z - H)^2} of the trapezoidal remainder.
inline double trapezoid_remainder_estimate(const EwaldParams& params, double H) {
  const double gap = params.L_z - H;
  return std::exp(-params.alpha * params.alpha * gap * gap);
}

namespace detail {

inline EnergyForces solve_impl(const ChargeSystem& system, const DielectricSpec& spec,
                               const EwaldParams& params, CorrectionFlags flags,
                               bool want_forces) {
  require_valid(system);
  require_padding(system, params);
  EnergyForces out = ewald2d::real_space(system, spec, params);
  const auto f = fourier_sum(system, spec, params, want_forces);
  out.breakdown["fourier3d"] = f.energy;
  out.breakdown["self"] = -params.alpha / std::sqrt(std::numbers::pi) * system.sum_squared_charges();
  if (want_forces) {
    for (std::size_t a = 0; a < system.size(); ++a) out.forces[a] -= f.grad[a];
  }
  if (flags.include_yb) out += yb_correction(system, spec, params);
  if (flags.include_elc) out += elc_impl(system, spec, params, want_forces);
  out.total_from_breakdown();
  return out;
}

}  // namespace detail

/// Real-space image sum + padded-box reciprocal sum + optional corrections.
inline EnergyForces solve(const ChargeSystem& system, const DielectricSpec& spec,
                          const EwaldParams& params, CorrectionFlags flags = {}) {
  return detail::solve_impl(system, spec, params, flags, true);
}

/// Energy only; the reciprocal and layer sums skip their force accumulation.
inline EnergyForces solve_energy(const ChargeSystem& system, const DielectricSpec& spec,
                                 const EwaldParams& params, CorrectionFlags flags = {}) {
  return detail::solve_impl(system, spec, params, flags, false);
}

/// Largest relative deviation max_i |F_fd,i - F_i| / |F_i| between
/// fourth-order central differences of the solve energy and its forces.
inline double forces_fd_check(const ChargeSystem& system, const DielectricSpec& spec,
                              const EwaldParams& params, CorrectionFlags flags, double step) {
  const EnergyForces ref = solve(system, spec, params, flags);
  double worst = 0.0;
  for (std::size_t a = 0; a < system.size(); ++a) {
    Vec3 fd;
    for (int axis = 0; axis < 3; ++axis) {
      fd[axis] = -central_derivative(
          [&](double d) {
            return solve_energy(system.displaced(a, axis, d), spec, params, flags).energy;
          },
          step);
    }
    const double mag = norm(ref.forces[a]);
    const double dev = norm(fd - ref.forces[a]);
    worst = std::max(worst, mag > 0.0 ? dev / mag : dev);
  }
  return worst;
}

}  // namespace slabwald::ewald3d
