#pragma once

// Doubly periodic Ewald summation with the dielectric image series. This is
// the O(N^2) reference solver: every ordered pair (i, j) interacts with the
// source j and with each retained image of j.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "core.hpp"
#include "parallel.hpp"
#include "reciprocal.hpp"
#include "special.hpp"

namespace slabwald::ewald2d {

namespace detail {

struct GValue {
  double g = 0.0;
  double dg = 0.0;  // d/dz
};

// e^{hz} erfc(h/2a + az) + e^{-hz} erfc(h/2a - az) and its z-derivative,
// written so that no intermediate overflows.
inline GValue g_alpha_eval(double h, double z, double alpha) {
  const double a = h / (2.0 * alpha);
  const double b = alpha * std::abs(z);
  const double hz = h * std::abs(z);
  const double gauss2 = a * a + b * b;
  double t1;
  double t2;
  if (a >= b) {
    const double e = std::exp(-gauss2);
    t1 = e * special::erfcx(a + b);
    t2 = e * special::erfcx(a - b);
  } else if (gauss2 > 745.0) {
    t1 = 0.0;
    t2 = 2.0 * std::exp(-hz);
  } else {
    const double e = std::exp(-gauss2);
    t1 = e * special::erfcx(a + b);
    t2 = 2.0 * std::exp(-hz) - e * special::erfcx(b - a);
  }
  GValue out;
  out.g = t1 + t2;
  out.dg = (z < 0.0 ? -1.0 : 1.0) * h * (t1 - t2);
  if (z == 0.0) out.dg = 0.0;
  return out;
}

}  // namespace detail

/// e^{hz} erfc(h/2alpha + alpha z) + e^{-hz} erfc(h/2alpha - alpha z).
inline double g_alpha(double h, double z, double alpha) {
  return detail::g_alpha_eval(h, z, alpha).g;
}

/// Derivative of g_alpha with respect to z.
inline double g_alpha_dz(double h, double z, double alpha) {
  return detail::g_alpha_eval(h, z, alpha).dg;
}

/// z erf(alpha z) + exp(-alpha^2 z^2) / (alpha sqrt(pi)).
inline double g0_alpha(double z, double alpha) {
  return z * std::erf(alpha * z) +
         std::exp(-alpha * alpha * z * z) / (alpha * std::sqrt(std::numbers::pi));
}

inline double g0_alpha_dz(double z, double alpha) { return std::erf(alpha * z); }

/// Terms evaluated by the pair kernel.
struct Terms {
  bool real = true;
  bool fourier = true;
  bool zero_mode = true;
  bool self = true;
};

/// Per-level contributions of the image series. Level 0 holds the
/// source-source interactions and the self term; level l > 0 holds the
/// interactions with the level-l images.
struct LevelResolved {
  std::vector<double> real;
  std::vector<double> fourier;
  std::vector<double> zero_mode;
  double self = 0.0;
  std::vector<std::vector<Vec3>> forces;  // [level][particle]
  std::vector<std::string> warnings;

  int max_level() const { return static_cast<int>(real.size()) - 1; }

  /// Energy and forces with the image series truncated after level m.
  EnergyForces truncated(int m) const {
    if (m < 0 || m > max_level()) throw std::out_of_range("truncation level out of range");
    EnergyForces out;
    const std::size_t n = forces.empty() ? 0 : forces[0].size();
    out.forces.assign(n, Vec3{});
    double er = 0.0, ef = 0.0, ej = 0.0;
    for (int l = 0; l <= m; ++l) {
      er += real[l];
      ef += fourier[l];
      ej += zero_mode[l];
      for (std::size_t i = 0; i < n; ++i) out.forces[i] += forces[l][i];
    }
    out.breakdown["real"] = er;
    out.breakdown["fourier"] = ef;
    out.breakdown["zero_mode"] = ej;
    out.breakdown["self"] = self;
    out.total_from_breakdown();
    out.warnings = warnings;
    return out;
  }
};

namespace detail {

constexpr double kFourierPrune = 46.0;

/// Image templates grouped by level; level 0 is the source itself.
inline std::vector<std::vector<ImageCharge>> templates_by_level(const DielectricSpec& spec,
                                                                double H, int M) {
  std::vector<std::vector<ImageCharge>> out(static_cast<std::size_t>(M) + 1);
  out[0].push_back(ImageCharge{});
  for (const auto& img : image_levels(spec, H, M)) out[img.level].push_back(img);
  return out;
}

/// Canonical particle order, so that results are independent of the input order.
inline std::vector<std::size_t> canonical_order(const ChargeSystem& system) {
  std::vector<std::size_t> order(system.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t u, std::size_t v) {
    const Vec3& a = system.position(u);
    const Vec3& b = system.position(v);
    return std::tie(a.x, a.y, a.z, system.charges()[u]) <
           std::tie(b.x, b.y, b.z, system.charges()[v]);
  });
  return order;
}

struct PairLevel {
  double real = 0.0;
  double fourier = 0.0;
  double zero_mode = 0.0;
  Vec3 grad_i;           // gradient of the pair energy with respect to r_i
  double grad_j_z = 0.0;  // z-gradient with respect to r_j (x, y are -grad_i)
};

/// Pair energies of the image-charge Ewald sum. The pair energy includes
/// the factor 1/2 of the ordered double sum.
class PairKernel {
 public:
  PairKernel(const ChargeSystem& system, const DielectricSpec& spec, const EwaldParams& params,
             Terms terms)
      : system_(system),
        alpha_(params.alpha),
        r_c_(params.r_c),
        terms_(terms),
        levels_(templates_by_level(spec, system.cell().H, params.M)) {
    const Cell& cell = system.cell();
    if (terms_.fourier) {
      shells_ = ReciprocalShells::build(cell, params.k_c);
      phases_ = PhaseTables(system, shells_.kx0, shells_.ky0, shells_.a_max, shells_.b_max);
    }
    mx_ = static_cast<int>(std::ceil(r_c_ / cell.Lx));
    my_ = static_cast<int>(std::ceil(r_c_ / cell.Ly));
  }

  std::size_t level_count() const { return levels_.size(); }

  struct Scratch {
    std::vector<double> cx, sx, cy, sy;
    ShellSums sums;
  };

  void pair(std::size_t i, std::size_t j, std::vector<PairLevel>& out, Scratch& scratch) const {
    const Cell& cell = system_.cell();
    const Vec3& ri = system_.position(i);
    const Vec3& rj = system_.position(j);
    const double qq = system_.charge(i) * system_.charge(j);
    const double area = cell.area();
    double dx = ri.x - rj.x;
    double dy = ri.y - rj.y;
    dx -= cell.Lx * std::nearbyint(dx / cell.Lx);
    dy -= cell.Ly * std::nearbyint(dy / cell.Ly);

    const std::size_t n_shells = shells_.shell_count();
    if (terms_.fourier && n_shells > 0) {
      phases_.pair_x(i, j, scratch.cx, scratch.sx);
      phases_.pair_y(i, j, scratch.cy, scratch.sy);
      scratch.sums.compute(shells_, scratch.cx, scratch.sx, scratch.cy, scratch.sy, n_shells);
    }

    out.assign(levels_.size(), PairLevel{});
    const double inv_sqrt_pi = 1.0 / std::sqrt(std::numbers::pi);
    for (std::size_t l = 0; l < levels_.size(); ++l) {
      PairLevel& acc = out[l];
      for (const ImageCharge& t : levels_[l]) {
        const double dz = ri.z - t.map(rj.z);
        const double w = qq * t.scale;
        Vec3 g{};

        if (terms_.real && std::abs(dz) <= r_c_) {
          const double rc2 = r_c_ * r_c_;
          for (int mx = -mx_; mx <= mx_; ++mx) {
            const double X = dx + mx * cell.Lx;
            for (int my = -my_; my <= my_; ++my) {
              if (i == j && l == 0 && mx == 0 && my == 0) continue;
              const double Y = dy + my * cell.Ly;
              const double r2 = X * X + Y * Y + dz * dz;
              if (r2 > rc2) continue;
              if (r2 == 0.0) throw numerical_error("coincident charges in real-space sum");
              const double r = std::sqrt(r2);
              const double ar = alpha_ * r;
              const double erfc_r = std::erfc(ar) / r;
              acc.real += 0.5 * w * erfc_r;
              const double dphi =
                  -(erfc_r + 2.0 * alpha_ * inv_sqrt_pi * std::exp(-ar * ar)) / r;
              const double f = 0.5 * w * dphi / r;
              g.x += f * X;
              g.y += f * Y;
              g.z += f * dz;
            }
          }
        }

        if (terms_.fourier && n_shells > 0) {
          const double pref = std::numbers::pi / (2.0 * area) * w;
          const double adz = std::abs(dz);
          const double b = alpha_ * adz;
          double e = 0.0, gx = 0.0, gy = 0.0, gz = 0.0;
          for (std::size_t s = 0; s < n_shells; ++s) {
            const double h = shells_.shell_h[s];
            const double a = h / (2.0 * alpha_);
            if (h * adz > kFourierPrune && a * a + b * b > kFourierPrune) break;
            const GValue G = g_alpha_eval(h, dz, alpha_);
            const double inv_h = 1.0 / h;
            e += scratch.sums.C[s] * inv_h * G.g;
            gx += scratch.sums.Dx[s] * inv_h * G.g;
            gy += scratch.sums.Dy[s] * inv_h * G.g;
            gz += scratch.sums.C[s] * inv_h * G.dg;
          }
          acc.fourier += pref * e;
          g.x += pref * gx;
          g.y += pref * gy;
          g.z += pref * gz;
        }

        if (terms_.zero_mode) {
          const double pref = -std::numbers::pi / area * w;
          if (l == 0) {
            acc.zero_mode += pref * g0_alpha(dz, alpha_);
            g.z += pref * g0_alpha_dz(dz, alpha_);
          } else {
            // Image templates lie entirely above or below the slab, so the
            // linear part |dz| of g0 cancels over a neutral system. Only the
            // decaying remainder is kept.
            const double adz = std::abs(dz);
            const double ec = std::erfc(alpha_ * adz);
            acc.zero_mode +=
                pref * (std::exp(-alpha_ * alpha_ * dz * dz) / (alpha_ * std::sqrt(std::numbers::pi)) -
                        adz * ec);
            g.z += pref * (dz < 0.0 ? ec : -ec);
          }
        }

        acc.grad_i += g;
        acc.grad_j_z -= t.sign * g.z;
      }
    }
  }

 private:
  const ChargeSystem& system_;
  double alpha_;
  double r_c_;
  Terms terms_;
  std::vector<std::vector<ImageCharge>> levels_;
  ReciprocalShells shells_;
  PhaseTables phases_;
  int mx_ = 0;
  int my_ = 0;
};

struct RowLevel {
  double real = 0.0;
  double fourier = 0.0;
  double zero_mode = 0.0;
  Vec3 grad;
};

// Row a holds sum_j E_aj and the full gradient with respect to r_a. Pair
// energies are symmetric (E_aj = E_ja, including image terms), so the
// gradient is 2 sum_{j != a} grad_i E_aj + d/dr_a E_aa.
inline std::vector<RowLevel> row(const PairKernel& kernel, std::size_t a, std::size_t n) {
  std::vector<RowLevel> out(kernel.level_count());
  std::vector<PairLevel> pair;
  PairKernel::Scratch scratch;
  for (std::size_t j = 0; j < n; ++j) {
    kernel.pair(a, j, pair, scratch);
    for (std::size_t l = 0; l < out.size(); ++l) {
      out[l].real += pair[l].real;
      out[l].fourier += pair[l].fourier;
      out[l].zero_mode += pair[l].zero_mode;
      if (j == a) {
        out[l].grad += Vec3{0.0, 0.0, pair[l].grad_i.z + pair[l].grad_j_z};
      } else {
        out[l].grad += 2.0 * pair[l].grad_i;
      }
    }
  }
  return out;
}

inline LevelResolved solve_levels(const ChargeSystem& input, const DielectricSpec& spec,
                                  const EwaldParams& params, Terms terms) {
  require_valid(input);
  const auto order = canonical_order(input);
  const ChargeSystem system = input.permuted(order);
  const std::size_t n = system.size();
  const PairKernel kernel(system, spec, params, terms);

  std::vector<std::vector<RowLevel>> rows(n);
  parallel_for(n, [&](std::size_t a) { rows[a] = row(kernel, a, n); });

  LevelResolved out;
  const std::size_t levels = kernel.level_count();
  out.real.assign(levels, 0.0);
  out.fourier.assign(levels, 0.0);
  out.zero_mode.assign(levels, 0.0);
  out.forces.assign(levels, std::vector<Vec3>(n));
  for (std::size_t l = 0; l < levels; ++l) {
    std::vector<double> er(n), ef(n), ej(n);
    for (std::size_t a = 0; a < n; ++a) {
      er[a] = rows[a][l].real;
      ef[a] = rows[a][l].fourier;
      ej[a] = rows[a][l].zero_mode;
      out.forces[l][order[a]] = -1.0 * rows[a][l].grad;
    }
    out.real[l] = compensated_sum(er);
    out.fourier[l] = compensated_sum(ef);
    out.zero_mode[l] = compensated_sum(ej);
  }
  if (terms.self) {
    out.self = -params.alpha / std::sqrt(std::numbers::pi) * system.sum_squared_charges();
  }
  return out;
}

}  // namespace detail

/// Contributions of each image level 0..params.M to the reference energy
/// and forces. `truncated(m)` reproduces energy_icm at truncation level m.
inline LevelResolved energy_icm_levels(const ChargeSystem& system, const DielectricSpec& spec,
                                       const EwaldParams& params) {
  return detail::solve_levels(system, spec, params, Terms{});
}

/// Reference energy and forces with images up to level params.M.
inline EnergyForces energy_icm(const ChargeSystem& system, const DielectricSpec& spec,
                               const EwaldParams& params) {
  return energy_icm_levels(system, spec, params).truncated(params.M);
}

/// Ewald2D without dielectric walls; params.M is ignored.
inline EnergyForces energy_homogeneous(const ChargeSystem& system, const EwaldParams& params) {
  return energy_icm(system, DielectricSpec{}, params.with_M(0));
}

/// Real-space part only (erfc sums against sources and images). Shared by
/// the three-dimensional reformulation.
inline EnergyForces real_space(const ChargeSystem& system, const DielectricSpec& spec,
                               const EwaldParams& params) {
  Terms terms;
  terms.fourier = false;
  terms.zero_mode = false;
  terms.self = false;
  auto levels = detail::solve_levels(system, spec, params, terms);
  EnergyForces out = levels.truncated(params.M);
  out.breakdown.erase("fourier");
  out.breakdown.erase("zero_mode");
  out.breakdown.erase("self");
  out.total_from_breakdown();
  return out;
}

/// Part of the energy that depends on the position of particle a:
/// 2 sum_{j != a} E_aj + E_aa. The system is not validated, so displaced
/// copies may be passed.
inline double particle_energy(const ChargeSystem& system, const DielectricSpec& spec,
                              const EwaldParams& params, std::size_t a) {
  const detail::PairKernel kernel(system, spec, params, Terms{});
  std::vector<detail::PairLevel> pair;
  detail::PairKernel::Scratch scratch;
  std::vector<double> parts;
  for (std::size_t j = 0; j < system.size(); ++j) {
    kernel.pair(a, j, pair, scratch);
    const double f = j == a ? 1.0 : 2.0;
    for (const auto& p : pair) {
      parts.push_back(f * p.real);
      parts.push_back(f * p.fourier);
      parts.push_back(f * p.zero_mode);
    }
  }
  return compensated_sum(parts);
}

/// Largest relative deviation max_i |F_fd,i - F_i| / |F_i| between
/// fourth-order central differences of the energy and the analytic forces.
inline double forces_fd_check(const ChargeSystem& system, const DielectricSpec& spec,
                              const EwaldParams& params, double step) {
  const EnergyForces ref = energy_icm(system, spec, params);
  double worst = 0.0;
  for (std::size_t a = 0; a < system.size(); ++a) {
    Vec3 fd;
    for (int axis = 0; axis < 3; ++axis) {
      fd[axis] = -central_derivative(
          [&](double d) { return particle_energy(system.displaced(a, axis, d), spec, params, a); },
          step);
    }
    const double mag = norm(ref.forces[a]);
    const double dev = norm(fd - ref.forces[a]);
    worst = std::max(worst, mag > 0.0 ? dev / mag : dev);
  }
  return worst;
}

/// Image contribution from the Poisson-summed form:
/// (pi/A) sum_ij q_i q_j sum_{h != 0} cos(h.rho_ij)/h sum_images scale e^{-h|dz|}.
/// The h = 0 term vanishes for a neutral system. Each image term is summed
/// until e^{-h|dz|} < 1e-18.
inline double spectral_image_part(const ChargeSystem& system, const DielectricSpec& spec, int M) {
  require_valid(system);
  const auto images = image_levels(spec, system.cell().H, M);
  if (images.empty()) return 0.0;
  const Cell& cell = system.cell();
  const std::size_t n = system.size();
  constexpr double cutoff = 41.5;

  double min_dz = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      for (const auto& t : images) {
        min_dz = std::min(min_dz, std::abs(system.position(i).z - t.map(system.position(j).z)));
      }
    }
  }
  if (!(min_dz > 0.0)) throw std::domain_error("image charge coincides with a source");
  const double h_max = cutoff / min_dz;
  if (h_max > 4000.0 * 2.0 * std::numbers::pi / cell.max_period()) {
    throw std::domain_error("charges too close to an interface for the spectral sum");
  }
  const ReciprocalShells lattice = ReciprocalShells::build(cell, h_max);
  const PhaseTables phases(system, lattice.kx0, lattice.ky0, lattice.a_max, lattice.b_max);

  std::vector<double> rows(n, 0.0);
  parallel_for(n, [&](std::size_t i) {
    std::vector<double> cx, sx, cy, sy;
    std::vector<std::pair<double, double>> active;  // (|dz|, scale), ascending
    std::vector<double> parts;
    for (std::size_t j = 0; j < n; ++j) {
      active.clear();
      for (const auto& t : images) {
        active.emplace_back(std::abs(system.position(i).z - t.map(system.position(j).z)), t.scale);
      }
      std::sort(active.begin(), active.end());
      const double pair_h_max = cutoff / active.front().first;
      phases.pair_x(i, j, cx, sx);
      phases.pair_y(i, j, cy, sy);
      double e = 0.0;
      for (std::size_t s = 0; s < lattice.shell_count(); ++s) {
        const double h = lattice.shell_h[s];
        if (h > pair_h_max) break;
        double c = 0.0;
        for (std::size_t k = lattice.shell_begin[s]; k < lattice.shell_begin[s + 1]; ++k) {
          const auto& v = lattice.vectors[k];
          c += v.weight * cx[v.a] * cy[v.b];
        }
        double img = 0.0;
        for (const auto& [adz, scale] : active) {
          if (h * adz > cutoff) break;
          img += scale * std::exp(-h * adz);
        }
        e += c / h * img;
      }
      parts.push_back(system.charge(i) * system.charge(j) * e);
    }
    rows[i] = compensated_sum(parts);
  });
  return std::numbers::pi / cell.area() * compensated_sum(rows);
}

/// Independent energy: the homogeneous Ewald2D energy (s = 6) plus the image
/// contribution of levels 1..M_large from the Poisson-summed form.
inline double spectral_image_energy(const ChargeSystem& system, const DielectricSpec& spec,
                                    int M_large) {
  const double s = 6.0;
  const double alpha = s / system.cell().min_period();
  const auto params = EwaldParams::from_splitting(s, alpha, 0.0, 0);
  return energy_homogeneous(system, params).energy + spectral_image_part(system, spec, M_large);
}

}  // namespace slabwald::ewald2d
