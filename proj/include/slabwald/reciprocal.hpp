#pragma once

// Two-dimensional reciprocal lattice of the periodic cell, folded into the
// quadrant a, b >= 0 and grouped into shells of equal |h|.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <vector>

#include "core.hpp"

namespace slabwald {

struct QuadrantVector {
  int a = 0;
  int b = 0;
  double weight = 1.0;  // number of lattice vectors (+-a, +-b) folded into this one
};

/// Nonzero vectors h = 2 pi (a/Lx, b/Ly), |h| <= k_max, sorted by |h|.
struct ReciprocalShells {
  double kx0 = 0.0;
  double ky0 = 0.0;
  int a_max = 0;
  int b_max = 0;
  std::vector<QuadrantVector> vectors;
  std::vector<std::size_t> shell_begin;  // shell s spans [shell_begin[s], shell_begin[s+1])
  std::vector<double> shell_h;

  std::size_t shell_count() const { return shell_h.size(); }

  static ReciprocalShells build(const Cell& cell, double k_max) {
    ReciprocalShells r;
    r.kx0 = 2.0 * std::numbers::pi / cell.Lx;
    r.ky0 = 2.0 * std::numbers::pi / cell.Ly;
    const double limit = k_max * (1.0 + 1e-12);
    r.a_max = static_cast<int>(std::floor(limit / r.kx0));
    r.b_max = static_cast<int>(std::floor(limit / r.ky0));

    struct Entry {
      double h2;
      QuadrantVector v;
    };
    std::vector<Entry> entries;
    for (int a = 0; a <= r.a_max; ++a) {
      for (int b = 0; b <= r.b_max; ++b) {
        if (a == 0 && b == 0) continue;
        const double hx = a * r.kx0;
        const double hy = b * r.ky0;
        const double h2 = hx * hx + hy * hy;
        if (h2 > limit * limit) continue;
        const double w = (a > 0 ? 2.0 : 1.0) * (b > 0 ? 2.0 : 1.0);
        entries.push_back({h2, {a, b, w}});
      }
    }
    std::sort(entries.begin(), entries.end(), [](const Entry& x, const Entry& y) {
      if (x.h2 != y.h2) return x.h2 < y.h2;
      if (x.v.a != y.v.a) return x.v.a < y.v.a;
      return x.v.b < y.v.b;
    });
    double shell_h2 = -1.0;
    for (std::size_t k = 0; k < entries.size(); ++k) {
      if (shell_h2 < 0.0 || entries[k].h2 > shell_h2 * (1.0 + 1e-13)) {
        shell_h2 = entries[k].h2;
        r.shell_begin.push_back(k);
        r.shell_h.push_back(std::sqrt(shell_h2));
      }
      r.vectors.push_back(entries[k].v);
    }
    r.shell_begin.push_back(entries.size());
    r.a_max = 0;
    r.b_max = 0;
    for (const auto& v : r.vectors) {
      r.a_max = std::max(r.a_max, v.a);
      r.b_max = std::max(r.b_max, v.b);
    }
    return r;
  }
};

/// Per-particle phase tables e^{i a kx0 x_j} and e^{i b ky0 y_j}.
struct PhaseTables {
  int a_max = 0;
  int b_max = 0;
  std::vector<std::complex<double>> ex;  // [j * (a_max + 1) + a]
  std::vector<std::complex<double>> ey;  // [j * (b_max + 1) + b]

  PhaseTables() = default;
  PhaseTables(const ChargeSystem& system, double kx0, double ky0, int amax, int bmax)
      : a_max(amax), b_max(bmax) {
    const std::size_t n = system.size();
    ex.resize(n * (a_max + 1));
    ey.resize(n * (b_max + 1));
    for (std::size_t j = 0; j < n; ++j) {
      const Vec3& r = system.position(j);
      for (int a = 0; a <= a_max; ++a) ex[j * (a_max + 1) + a] = std::polar(1.0, a * kx0 * r.x);
      for (int b = 0; b <= b_max; ++b) ey[j * (b_max + 1) + b] = std::polar(1.0, b * ky0 * r.y);
    }
  }

  /// cos and sin of a kx0 (x_i - x_j) for a = 0..a_max.
  void pair_x(std::size_t i, std::size_t j, std::vector<double>& c, std::vector<double>& s) const {
    fill(ex, a_max, i, j, c, s);
  }
  void pair_y(std::size_t i, std::size_t j, std::vector<double>& c, std::vector<double>& s) const {
    fill(ey, b_max, i, j, c, s);
  }

 private:
  static void fill(const std::vector<std::complex<double>>& t, int m, std::size_t i, std::size_t j,
                   std::vector<double>& c, std::vector<double>& s) {
    c.resize(m + 1);
    s.resize(m + 1);
    const std::size_t stride = m + 1;
    for (int k = 0; k <= m; ++k) {
      const auto z = t[i * stride + k] * std::conj(t[j * stride + k]);
      c[k] = z.real();
      s[k] = z.imag();
    }
  }
};

/// Folded lattice sums for one pair separation, per shell:
///   C  = sum_h cos(h.rho),  Dx = d C / d rho_x,  Dy = d C / d rho_y.
struct ShellSums {
  std::vector<double> C, Dx, Dy;

  void compute(const ReciprocalShells& shells, const std::vector<double>& cx,
               const std::vector<double>& sx, const std::vector<double>& cy,
               const std::vector<double>& sy, std::size_t shell_limit) {
    C.assign(shell_limit, 0.0);
    Dx.assign(shell_limit, 0.0);
    Dy.assign(shell_limit, 0.0);
    for (std::size_t s = 0; s < shell_limit; ++s) {
      double c = 0.0, dx = 0.0, dy = 0.0;
      for (std::size_t k = shells.shell_begin[s]; k < shells.shell_begin[s + 1]; ++k) {
        const auto& v = shells.vectors[k];
        c += v.weight * cx[v.a] * cy[v.b];
        dx -= v.weight * v.a * shells.kx0 * sx[v.a] * cy[v.b];
        dy -= v.weight * v.b * shells.ky0 * cx[v.a] * sy[v.b];
      }
      C[s] = c;
      Dx[s] = dx;
      Dy[s] = dy;
    }
  }
};

}  // namespace slabwald
