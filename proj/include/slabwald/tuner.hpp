#pragma once

// Parameter selection for a target tolerance: image truncation level M first,
// then the padded height L_z, then the splitting parameters.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "core.hpp"
#include "errors.hpp"

namespace slabwald::tuner {

enum class Rounding { ceil, nearest };

struct ToleranceRequest {
  double epsilon = 1e-6;
  Cell geometry;
  DielectricSpec spec;
  Rounding rounding = Rounding::ceil;
  bool continuous_s = false;
  /// Real-space cutoff the default alpha policy aims for; defaults to
  /// min(Lx, Ly) / 4.
  std::optional<double> r_c_target;

  void check() const {
    if (!(epsilon > 0.0) || !(epsilon < 1.0)) {
      throw validation_error("tolerance must lie in (0, 1)");
    }
    if (!(geometry.Lx > 0.0) || !(geometry.Ly > 0.0) || !(geometry.H > 0.0)) {
      throw validation_error("cell lengths must be positive");
    }
  }
};

inline int select_M(const ToleranceRequest& req) {
  req.check();
  const double gu = req.spec.gamma_u, gd = req.spec.gamma_d;
  if (gu == 0.0 && gd == 0.0) return 0;
  if (gu == 0.0 || gd == 0.0) return 1;
  const double L = req.geometry.max_period();
  const double decay = 4.0 * std::numbers::pi * req.geometry.H / L;
  const double lg = std::log(std::abs(gu * gd));
  const double m = (2.0 * std::log(req.epsilon) - decay - lg) / (lg - decay);
  return std::max(0, static_cast<int>(std::ceil(m)));
}

/// Unrounded padded height.
inline double select_Lz_raw(const ToleranceRequest& req, int M) {
  req.check();
  const double gu = req.spec.gamma_u, gd = req.spec.gamma_d;
  const double H = req.geometry.H;
  const double L = req.geometry.max_period();
  const double scale = L / (2.0 * std::numbers::pi);
  const double log_inv_eps = std::log(1.0 / req.epsilon);
  if (std::abs(gu * gd) * std::exp(4.0 * std::numbers::pi * H / L) < 1.0) {
    const double extra =
        std::log(std::abs(gu + gd + std::exp(-2.0 * std::numbers::pi * H / L)));
    return H + scale * (log_inv_eps + std::max(0.0, extra));
  }
  const double lz = (M + 1) * H + scale * (log_inv_eps + std::log(std::abs(gu * gd)));
  return std::max(lz, (M + 1) * H);
}

inline double round_length(double v, Rounding r) {
  return r == Rounding::ceil ? std::ceil(v) : std::nearbyint(v);
}

inline double select_Lz(const ToleranceRequest& req, int M) {
  const double raw = select_Lz_raw(req, M);
  double lz = round_length(raw, req.rounding);
  if (!(lz > req.geometry.H)) lz = std::ceil(std::nextafter(req.geometry.H, INFINITY));
  return lz;
}

/// Smallest integer s >= 1 with e^{-s^2}/s^2 <= eps, or the bisection root.
inline double select_s(double epsilon, bool continuous) {
  if (!continuous) {
    int s = 1;
    while (errors::splitting_error(s) > epsilon) ++s;
    return s;
  }
  if (errors::splitting_error(1.0) <= epsilon) return 1.0;
  double lo = 1.0, hi = 2.0;
  while (errors::splitting_error(hi) > epsilon) hi *= 2.0;
  for (int k = 0; k < 200 && hi - lo > 1e-15 * hi; ++k) {
    const double mid = 0.5 * (lo + hi);
    (errors::splitting_error(mid) > epsilon ? lo : hi) = mid;
  }
  return hi;
}

struct SplittingChoice {
  double s = 0.0;
  double alpha = 0.0;
  double r_c = 0.0;
  double k_c = 0.0;
  double alpha_min = 0.0;  // lower bound from the trapezoidal remainder
  bool raised = false;     // alpha was raised to alpha_min
  bool feasible = true;
};

inline SplittingChoice select_splitting(const ToleranceRequest& req, double Lz, double H) {
  req.check();
  SplittingChoice c;
  c.s = select_s(req.epsilon, req.continuous_s);
  const double rc_target = req.r_c_target.value_or(req.geometry.min_period() / 4.0);
  if (!(rc_target > 0.0)) throw validation_error("real-space cutoff target must be positive");
  c.alpha = c.s / rc_target;
  const double gap = Lz - H;
  c.alpha_min = gap > 0.0 ? std::sqrt(std::log(1.0 / req.epsilon)) / gap
                          : std::numeric_limits<double>::infinity();
  if (!std::isfinite(c.alpha_min)) {
    c.feasible = false;
  } else if (c.alpha < c.alpha_min) {
    c.alpha = c.alpha_min;
    c.raised = true;
  }
  if (c.feasible) {
    c.r_c = c.s / c.alpha;
    c.k_c = 2.0 * c.s * c.alpha;
  }
  return c;
}

struct TuneResult {
  EwaldParams params;
  errors::ErrorBudget budget;
  double Lz_unrounded = 0.0;
  SplittingChoice splitting;
  std::vector<std::string> diagnostics;
};

/// Runs the three steps in order. Budget fields exceeding the tolerance are
/// reported in `diagnostics`.
inline TuneResult select_all(const ToleranceRequest& req) {
  TuneResult out;
  const int M = select_M(req);
  out.Lz_unrounded = select_Lz_raw(req, M);
  const double Lz = select_Lz(req, M);
  out.splitting = select_splitting(req, Lz, req.geometry.H);
  if (!out.splitting.feasible) {
    out.diagnostics.push_back("infeasible splitting: L_z - H leaves no room for the trapezoidal bound");
    out.params.M = M;
    out.params.L_z = Lz;
    out.params.s = out.splitting.s;
    return out;
  }
  out.params = EwaldParams::from_splitting(out.splitting.s, out.splitting.alpha, Lz, M);
  out.budget = errors::total_budget(out.params, req.spec, req.geometry);
  auto flag = [&](const char* name, double v) {
    if (v > req.epsilon) {
      std::ostringstream msg;
      msg << name << " estimate " << v << " exceeds tolerance " << req.epsilon;
      out.diagnostics.push_back(msg.str());
    }
  };
  flag("splitting", out.budget.splitting);
  flag("image_truncation", out.budget.image_truncation);
  flag("elc_base", out.budget.elc_base);
  flag("elc_image", out.budget.elc_image);
  flag("trapezoidal", out.budget.trapezoidal);
  if (out.splitting.raised) {
    out.diagnostics.push_back("alpha raised to satisfy the trapezoidal bound");
  }
  return out;
}

}  // namespace slabwald::tuner
