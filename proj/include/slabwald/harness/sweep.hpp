#pragma once

// Error sweeps: measured relative error of an approximate solve against the
// converged reference, next to the a-priori estimate, for every grid value.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <ostream>
#include <string>
#include <vector>

#include "../core.hpp"
#include "../errors.hpp"
#include "../ewald2d.hpp"
#include "../ewald3d.hpp"
#include "config.hpp"
#include "generate.hpp"

namespace slabwald::harness {

struct SweepRow {
  double value = 0.0;
  double rel_err = 0.0;
  double estimate = 0.0;
  double wall_ms = 0.0;
  double est_truncation = 0.0;
  double est_elc = 0.0;
  std::string failure;  // empty unless this grid point failed
};

struct SweepResult {
  SweepConfig config;
  int M_ref = 0;
  double reference_energy = 0.0;
  std::vector<SweepRow> rows;
};

/// max_i |F_i - G_i| / |F_i|.
inline double force_rel_error(const std::vector<Vec3>& approx, const std::vector<Vec3>& ref) {
  double worst = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const double mag = norm(ref[i]);
    const double dev = norm(approx[i] - ref[i]);
    worst = std::max(worst, mag > 0.0 ? dev / mag : dev);
  }
  return worst;
}

inline double energy_rel_error(double approx, double ref) {
  return std::abs(approx - ref) / std::abs(ref);
}

/// Smallest M whose truncation estimate drops below `threshold`.
inline int reference_M(const DielectricSpec& spec, const Cell& cell, double threshold = 1e-15) {
  if (spec.gamma_u == 0.0 && spec.gamma_d == 0.0) return 0;
  if (spec.gamma_u == 0.0 || spec.gamma_d == 0.0) return 1;
  for (int M = 0; M < 100000; ++M) {
    if (errors::image_truncation_energy(M, spec.gamma_u, spec.gamma_d, cell.H, cell.Lx, cell.Ly) <
        threshold) {
      return M;
    }
  }
  throw numerical_error("image series does not converge for these reflection factors");
}

/// Reference parameters: s = 6 and r_c = min(Lx, Ly).
inline EwaldParams reference_params(const Cell& cell, int M) {
  const double s = 6.0;
  return EwaldParams::from_splitting(s, s / cell.min_period(), 0.0, M);
}

/// Splitting for the padded-box solve: r_c = min(Lx, Ly)/2 by default,
/// raised so that alpha (L_z - (M+1)H) >= 6 when the images leave a gap,
/// and capped so the k-space sum holds at most ~1.5e6 vectors.
inline double default_alpha_3d(const Cell& cell, double s, double Lz, int M) {
  double alpha = s / (cell.min_period() / 2.0);
  const double gap = Lz - (M + 1) * cell.H;
  if (gap > 0.0) alpha = std::max(alpha, 6.0 / gap);
  const double volume = cell.area() * Lz;
  const double k_cap = std::cbrt(1.5e6 * 12.0 * std::numbers::pi * std::numbers::pi / volume);
  return std::min(alpha, k_cap / (2.0 * s));
}

inline SweepResult run_sweep(const SweepConfig& config) {
  config.check();
  SweepResult result;
  result.config = config;
  const Cell& cell = config.cell;
  const DielectricSpec& spec = config.spec;
  const ChargeSystem system = gen_system(config.seed, config.composition, cell);
  require_valid(system);

  int M_ref = reference_M(spec, cell);
  if (config.sweep == SweepVar::M) {
    M_ref = std::max(M_ref, static_cast<int>(config.values.back()));
  } else {
    M_ref = std::max(M_ref, config.M);
  }
  result.M_ref = M_ref;
  const auto levels = ewald2d::energy_icm_levels(system, spec, reference_params(cell, M_ref));
  const EnergyForces reference = levels.truncated(M_ref);
  result.reference_energy = reference.energy;
  const bool force = config.quantity == Quantity::force;

  // The truncated-series sweep reuses the level-resolved reference when the
  // splitting matches.
  ewald2d::LevelResolved approx_levels;
  const bool own_levels = config.approx == Approx::ewald2d && (config.s != 6.0 || config.alpha);
  if (own_levels) {
    const double alpha = config.alpha.value_or(config.s / cell.min_period());
    approx_levels = ewald2d::energy_icm_levels(
        system, spec, EwaldParams::from_splitting(config.s, alpha, 0.0, M_ref));
  }

  for (double value : config.values) {
    SweepRow row;
    row.value = value;
    const int M = config.M_for(value);
    const auto start = std::chrono::steady_clock::now();
    try {
      EnergyForces approx;
      if (config.approx == Approx::ewald2d) {
        approx = (own_levels ? approx_levels : levels).truncated(M);
        row.est_truncation =
            force ? errors::image_truncation_force(M, spec.gamma_u, spec.gamma_d, cell.H, cell.Lx, cell.Ly)
                  : errors::image_truncation_energy(M, spec.gamma_u, spec.gamma_d, cell.H, cell.Lx, cell.Ly);
      } else {
        const double Lz = config.Lz_for(value);
        const double alpha = config.alpha.value_or(default_alpha_3d(cell, config.s, Lz, M));
        const auto params = EwaldParams::from_splitting(config.s, alpha, Lz, M);
        const ewald3d::CorrectionFlags flags{config.yb, config.elc};
        approx = force ? ewald3d::solve(system, spec, params, flags)
                       : ewald3d::solve_energy(system, spec, params, flags);
        row.est_truncation =
            force ? errors::image_truncation_force(M, spec.gamma_u, spec.gamma_d, cell.H, cell.Lx, cell.Ly)
                  : errors::image_truncation_energy(M, spec.gamma_u, spec.gamma_d, cell.H, cell.Lx, cell.Ly);
        if (!config.elc) {
          row.est_elc = force ? errors::elc_force_estimate(M, spec.gamma_u, spec.gamma_d, cell.H,
                                                           cell.Lx, cell.Ly, Lz)
                              : errors::elc_energy_estimate(M, spec.gamma_u, spec.gamma_d, cell.H,
                                                            cell.Lx, cell.Ly, Lz);
        }
      }
      row.rel_err = force ? force_rel_error(approx.forces, reference.forces)
                          : energy_rel_error(approx.energy, reference.energy);
      if (!std::isfinite(row.rel_err)) throw numerical_error("non-finite relative error");
    } catch (const std::exception& e) {
      row.rel_err = std::numeric_limits<double>::quiet_NaN();
      row.failure = e.what();
    }
    row.estimate = row.est_truncation + row.est_elc;
    row.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    result.rows.push_back(row);
  }
  return result;
}

inline std::string csv_number(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}

inline void write_csv(std::ostream& out, const SweepResult& result) {
  out << "sweep_var,value,rel_err,estimate,wall_ms\n";
  const std::string var = to_string(result.config.sweep);
  for (const auto& r : result.rows) {
    out << var << ',' << csv_number(r.value) << ',' << csv_number(r.rel_err) << ','
        << csv_number(r.estimate) << ',' << csv_number(r.wall_ms) << '\n';
  }
}

}  // namespace slabwald::harness
