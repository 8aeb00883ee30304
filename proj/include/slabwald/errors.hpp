#pragma once

// A-priori error magnitudes for each approximation step. All estimates carry
// a unit prefactor unless one is passed explicitly.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "core.hpp"

namespace slabwald::errors {

enum class Regime { contracting, marginal, amplifying };

inline std::string to_string(Regime r) {
  switch (r) {
    case Regime::contracting: return "contracting";
    case Regime::marginal: return "marginal";
    case Regime::amplifying: return "amplifying";
  }
  return "unknown";
}

struct ErrorBudget {
  double splitting = 0.0;
  double image_truncation = 0.0;
  double elc_base = 0.0;
  double elc_image = 0.0;
  double trapezoidal = 0.0;
  Regime regime = Regime::contracting;
  double g_u = 0.0;
  double g_d = 0.0;

  double total() const { return splitting + image_truncation + elc_base + elc_image + trapezoidal; }
};

inline int half_levels(int M) { return (M + 1) / 2; }

/// |gamma_u gamma_d|^n e^{-4 pi H n / max(Lx, Ly)} with n = floor((M+1)/2).
inline double image_truncation_energy(int M, double gamma_u, double gamma_d, double H, double Lx,
                                      double Ly, double prefactor = 1.0) {
  if (M < 0) throw std::domain_error("image truncation level must be >= 0");
  const double gg = std::abs(gamma_u * gamma_d);
  if (gamma_u == 0.0 && gamma_d == 0.0) return 0.0;
  if (gg == 0.0 && M >= 1) return 0.0;
  const int n = half_levels(M);
  const double L = std::max(Lx, Ly);
  return prefactor * std::pow(gg, n) * std::exp(-4.0 * std::numbers::pi * H * n / L);
}

/// Energy estimate divided by max(floor((M+1)/2), 1).
inline double image_truncation_force(int M, double gamma_u, double gamma_d, double H, double Lx,
                                     double Ly, double prefactor = 1.0) {
  return image_truncation_energy(M, gamma_u, gamma_d, H, Lx, Ly, prefactor) /
         std::max(half_levels(M), 1);
}

/// |gamma_+^(l)| + |gamma_-^(l)|.
inline double image_weight(int l, double gamma_u, double gamma_d) {
  const double up = int_pow(std::abs(gamma_d), (l + 1) / 2) * int_pow(std::abs(gamma_u), l / 2);
  const double dn = int_pow(std::abs(gamma_d), l / 2) * int_pow(std::abs(gamma_u), (l + 1) / 2);
  return up + dn;
}

inline double elc_base_estimate(double H, double Lx, double Ly, double Lz) {
  return std::exp(-2.0 * std::numbers::pi * (Lz - H) / std::max(Lx, Ly));
}

inline double elc_image_estimate(int M, double gamma_u, double gamma_d, double H, double Lx,
                                 double Ly, double Lz) {
  const double L = std::max(Lx, Ly);
  double s = 0.0;
  for (int l = 1; l <= M; ++l) {
    s += image_weight(l, gamma_u, gamma_d) *
         std::exp(-2.0 * std::numbers::pi * (Lz - (l + 1) * H) / L);
  }
  return s;
}

/// e^{-2 pi (Lz-H)/L} + sum_{l=1}^{M} C^(l) e^{-2 pi (Lz-(l+1)H)/L}.
inline double elc_energy_estimate(int M, double gamma_u, double gamma_d, double H, double Lx,
                                  double Ly, double Lz, double prefactor = 1.0) {
  return prefactor * (elc_base_estimate(H, Lx, Ly, Lz) +
                      elc_image_estimate(M, gamma_u, gamma_d, H, Lx, Ly, Lz));
}

/// Same asymptotic form as the energy estimate.
inline double elc_force_estimate(int M, double gamma_u, double gamma_d, double H, double Lx,
                                 double Ly, double Lz, double prefactor = 1.0) {
  return elc_energy_estimate(M, gamma_u, gamma_d, H, Lx, Ly, Lz, prefactor);
}

/// g = gamma e^{2 pi H / max(Lx, Ly)}.
inline double amplification(double gamma, double H, double Lx, double Ly) {
  return gamma * std::exp(2.0 * std::numbers::pi * H / std::max(Lx, Ly));
}

inline Regime classify(double g_u, double g_d) {
  const double p = std::abs(g_u * g_d);
  if (std::abs(p - 1.0) <= 1e-12) return Regime::marginal;
  return p < 1.0 ? Regime::contracting : Regime::amplifying;
}

struct LeadingOrder {
  Regime regime = Regime::contracting;
  double magnitude = 0.0;  // closed form of the regime
  double exact = 0.0;      // finite sum over levels 0..M
};

/// Leading-order ELC magnitude in terms of g_u, g_d. `exact` evaluates the
/// finite level sum; `magnitude` is the closed form of the detected regime.
inline LeadingOrder leading_order(int M, double g_u, double g_d, double H, double Lx, double Ly,
                                  double Lz) {
  const double L = std::max(Lx, Ly);
  const double gu = std::abs(g_u);
  const double gd = std::abs(g_d);
  const double gg = gu * gd;
  const double base = std::exp(-2.0 * std::numbers::pi * (Lz - H) / L);
  const double far = std::exp(-2.0 * std::numbers::pi * Lz / L);
  LeadingOrder out;
  out.regime = classify(g_u, g_d);
  double s = 1.0;
  for (int l = 1; l <= M; ++l) {
    s += int_pow(gu, l / 2) * int_pow(gd, (l + 1) / 2) + int_pow(gu, (l + 1) / 2) * int_pow(gd, l / 2);
  }
  out.exact = base * s;
  switch (out.regime) {
    case Regime::amplifying:
      out.magnitude = (M % 2 == 0) ? 2.0 * std::pow(gg, M / 2.0) * base
                                   : (gu + gd + 2.0) * std::pow(gg, (M - 1) / 2.0) * base;
      break;
    case Regime::marginal:
      out.magnitude = 0.5 * M * (gu + gd + 2.0) * far;
      break;
    case Regime::contracting:
      out.magnitude = (gu + gd + 2.0) * far;
      break;
  }
  return out;
}

/// e^{-s^2} / s^2.
inline double splitting_error(double s) { return std::exp(-s * s) / (s * s); }

/// e^{-alpha^2 (Lz - H)^2}.
inline double trapezoidal_error(double alpha, double H, double Lz) {
  const double gap = Lz - H;
  return std::exp(-alpha * alpha * gap * gap);
}

/// All error magnitudes for a parameter set.
inline ErrorBudget total_budget(const EwaldParams& params, const DielectricSpec& spec,
                                const Cell& cell) {
  ErrorBudget b;
  const double gu = spec.gamma_u, gd = spec.gamma_d;
  b.splitting = splitting_error(params.s);
  b.image_truncation = image_truncation_energy(params.M, gu, gd, cell.H, cell.Lx, cell.Ly);
  b.elc_base = elc_base_estimate(cell.H, cell.Lx, cell.Ly, params.L_z);
  b.elc_image = elc_image_estimate(params.M, gu, gd, cell.H, cell.Lx, cell.Ly, params.L_z);
  b.trapezoidal = trapezoidal_error(params.alpha, cell.H, params.L_z);
  b.g_u = amplification(gu, cell.H, cell.Lx, cell.Ly);
  b.g_d = amplification(gd, cell.H, cell.Lx, cell.Ly);
  b.regime = classify(b.g_u, b.g_d);
  return b;
}

}  // namespace slabwald::errors
