#pragma once

// Decay fits on sweep rows. Points at or below the noise floor (1e-14) and
// failed points are ignored; fewer than four usable points is an error.

#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "../core.hpp"
#include "../errors.hpp"
#include "sweep.hpp"

namespace slabwald::harness {

inline constexpr double kNoiseFloor = 1e-14;

enum class FitModel { exp_in_M, exp_in_P, composite };

struct FitResult {
  double rate = 0.0;       // d log y / dx
  double prefactor = 0.0;  // y at x = 0
  double residual = 0.0;   // RMS of log(model) - log(y)
  double A = 0.0;          // composite weights
  double B = 0.0;
  std::size_t points = 0;
};

namespace detail {

inline bool usable(double y) { return std::isfinite(y) && y > kNoiseFloor; }

inline void require_points(std::size_t n) {
  if (n < 4) throw numerical_error("fit-degenerate: fewer than 4 points above the noise floor");
}

inline double rms_log(const std::vector<double>& model, const std::vector<double>& y) {
  double acc = 0.0;
  for (std::size_t k = 0; k < y.size(); ++k) {
    const double d = std::log(model[k]) - std::log(y[k]);
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(y.size()));
}

}  // namespace detail

/// Least squares for log y = log c + rate x.
inline FitResult fit_exponential(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> xs, ls;
  for (std::size_t k = 0; k < y.size(); ++k) {
    if (detail::usable(y[k])) {
      xs.push_back(x[k]);
      ls.push_back(std::log(y[k]));
    }
  }
  detail::require_points(xs.size());
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, ml = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    mx += xs[k] / n;
    ml += ls[k] / n;
  }
  double sxx = 0.0, sxl = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    sxx += (xs[k] - mx) * (xs[k] - mx);
    sxl += (xs[k] - mx) * (ls[k] - ml);
  }
  if (!(sxx > 0.0)) throw numerical_error("fit-degenerate: all abscissae coincide");
  FitResult r;
  r.rate = sxl / sxx;
  r.prefactor = std::exp(ml - r.rate * mx);
  double acc = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const double d = std::log(r.prefactor) + r.rate * xs[k] - ls[k];
    acc += d * d;
  }
  r.residual = std::sqrt(acc / n);
  r.points = xs.size();
  return r;
}

/// y ~ A t with only A free: log A is the mean log ratio.
inline FitResult fit_scaled(const std::vector<double>& y, const std::vector<double>& t) {
  std::vector<double> ys, model;
  double acc = 0.0;
  for (std::size_t k = 0; k < y.size(); ++k) {
    if (detail::usable(y[k]) && t[k] > 0.0) {
      ys.push_back(y[k]);
      model.push_back(t[k]);
      acc += std::log(y[k] / t[k]);
    }
  }
  detail::require_points(ys.size());
  FitResult r;
  r.A = std::exp(acc / static_cast<double>(ys.size()));
  for (auto& m : model) m *= r.A;
  r.prefactor = r.A;
  r.residual = detail::rms_log(model, ys);
  r.points = ys.size();
  return r;
}

/// y ~ A t1 + B t2 with A, B > 0. A linear least-squares fit on relative
/// residuals seeds a Levenberg-Marquardt solve in (log A, log B) that
/// minimizes the log-space residual.
inline FitResult fit_composite(const std::vector<double>& y, const std::vector<double>& t1,
                               const std::vector<double>& t2) {
  std::vector<double> ys, a, b;
  for (std::size_t k = 0; k < y.size(); ++k) {
    if (detail::usable(y[k]) && t1[k] >= 0.0 && t2[k] >= 0.0 && t1[k] + t2[k] > 0.0) {
      ys.push_back(y[k]);
      a.push_back(t1[k]);
      b.push_back(t2[k]);
    }
  }
  detail::require_points(ys.size());
  const std::size_t n = ys.size();

  // Relative-residual normal equations.
  double saa = 0, sab = 0, sbb = 0, say = 0, sby = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double u = a[k] / ys[k], v = b[k] / ys[k];
    saa += u * u;
    sab += u * v;
    sbb += v * v;
    say += u;
    sby += v;
  }
  double A = 0, B = 0;
  const double det = saa * sbb - sab * sab;
  if (det > 1e-300 * saa * sbb) {
    A = (say * sbb - sby * sab) / det;
    B = (sby * saa - say * sab) / det;
  }
  // Fall back to the better one-term solution when a weight goes non-positive.
  if (!(A > 0.0) || !(B > 0.0)) {
    const double A1 = saa > 0 ? say / saa : 0.0, B1 = sbb > 0 ? sby / sbb : 0.0;
    const double r1 = saa > 0 ? n - say * say / saa : INFINITY;
    const double r2 = sbb > 0 ? n - sby * sby / sbb : INFINITY;
    A = r1 <= r2 ? A1 : 1e-3 * B1;
    B = r1 <= r2 ? 1e-3 * A1 : B1;
    if (!(A > 0.0)) A = 1.0;
    if (!(B > 0.0)) B = 1.0;
  }

  auto cost = [&](double la, double lb, std::vector<double>* model) {
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double m = std::exp(la) * a[k] + std::exp(lb) * b[k];
      if (model) (*model)[k] = m;
      const double d = std::log(m) - std::log(ys[k]);
      acc += d * d;
    }
    return acc;
  };
  double la = std::log(A), lb = std::log(B);
  double c = cost(la, lb, nullptr);
  double lambda = 1e-3;
  for (int it = 0; it < 200; ++it) {
    // Gauss-Newton pieces for r_k = log(e^la a_k + e^lb b_k) - log y_k.
    double jaa = 0, jab = 0, jbb = 0, ga = 0, gb = 0;
    for (std::size_t k = 0; k < n; ++k) {
      const double pa = std::exp(la) * a[k], pb = std::exp(lb) * b[k];
      const double m = pa + pb;
      const double r = std::log(m) - std::log(ys[k]);
      const double da = pa / m, db = pb / m;
      jaa += da * da;
      jab += da * db;
      jbb += db * db;
      ga += da * r;
      gb += db * r;
    }
    bool improved = false;
    while (lambda < 1e12) {
      const double m11 = jaa * (1 + lambda) + 1e-300, m22 = jbb * (1 + lambda) + 1e-300;
      const double d = m11 * m22 - jab * jab;
      const double step_a = -(ga * m22 - gb * jab) / d;
      const double step_b = -(gb * m11 - ga * jab) / d;
      const double trial = cost(la + step_a, lb + step_b, nullptr);
      if (std::isfinite(trial) && trial < c) {
        const double gain = c - trial;
        la += step_a;
        lb += step_b;
        c = trial;
        lambda = std::max(lambda / 10.0, 1e-12);
        improved = gain > 1e-15 * c;
        break;
      }
      lambda *= 10.0;
    }
    if (!improved) break;
  }

  FitResult r;
  std::vector<double> model(n);
  cost(la, lb, &model);
  r.A = std::exp(la);
  r.B = std::exp(lb);
  r.prefactor = r.A;
  r.residual = detail::rms_log(model, ys);
  r.points = n;
  return r;
}

/// Fits a sweep. exp_in_M uses x = floor((M+1)/2), exp_in_P the raw grid
/// value. composite takes the image-truncation and ELC energy estimates of
/// each grid point as the two basis terms.
inline FitResult fit_decay(const SweepResult& sweep, FitModel model) {
  const auto& cfg = sweep.config;
  std::vector<double> x, y;
  for (const auto& row : sweep.rows) {
    y.push_back(row.rel_err);
    x.push_back(model == FitModel::exp_in_M ? errors::half_levels(static_cast<int>(row.value))
                                            : row.value);
  }
  if (model != FitModel::composite) return fit_exponential(x, y);
  std::vector<double> t1, t2;
  const auto& c = cfg.cell;
  for (const auto& row : sweep.rows) {
    const int M = cfg.M_for(row.value);
    const double Lz = cfg.Lz_for(row.value);
    t1.push_back(errors::image_truncation_energy(M, cfg.spec.gamma_u, cfg.spec.gamma_d, c.H, c.Lx, c.Ly));
    t2.push_back(errors::elc_energy_estimate(M, cfg.spec.gamma_u, cfg.spec.gamma_d, c.H, c.Lx, c.Ly, Lz));
  }
  return fit_composite(y, t1, t2);
}

}  // namespace slabwald::harness
