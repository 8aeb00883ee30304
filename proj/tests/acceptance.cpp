// Acceptance suite. One PASS/FAIL line per criterion; every tolerance and
// time limit is pinned below. Usage: acceptance [--criterion N]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "slabwald/harness/config.hpp"
#include "slabwald/harness/fit.hpp"
#include "slabwald/harness/generate.hpp"
#include "slabwald/harness/sweep.hpp"
#include "slabwald/slabwald.hpp"

namespace sw = slabwald;
namespace hs = slabwald::harness;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [violated: " << what << "]";
    }
  }
};

struct Criterion {
  int id;
  const char* name;
  double time_limit_s;
  std::function<void(Outcome&)> run;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

const sw::Cell kCell10{10.0, 10.0, 1.0};

// 1. Padded-box solve with both corrections equals the image-charge sum.
void cross_solver(Outcome& out) {
  constexpr double kEnergyTol = 1e-9, kForceTol = 1e-8;
  const double s = 6.0, alpha = s / 5.0;
  const int M = 30;
  double worst_e = 0.0, worst_f = 0.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto system = hs::gen_system(seed, hs::default_composition(), kCell10);
    for (double g : {0.0, 0.6, 1.0}) {
      const sw::DielectricSpec spec(g, g);
      // Trapezoidal remainder below 1e-14, and room above the outermost image.
      const double gap = std::sqrt(std::log(1e14)) / alpha;
      const double Lz = std::max(kCell10.H + gap, (M + 1) * kCell10.H + 7.0 / alpha);
      const auto p2 = sw::EwaldParams::from_splitting(s, alpha, 0.0, M);
      const auto p3 = sw::EwaldParams::from_splitting(s, alpha, Lz, M);
      const auto e2 = sw::ewald2d::energy_icm(system, spec, p2);
      const auto e3 = sw::ewald3d::solve(system, spec, p3, {true, true});
      worst_e = std::max(worst_e, hs::energy_rel_error(e3.energy, e2.energy));
      worst_f = std::max(worst_f, hs::force_rel_error(e3.forces, e2.forces));
    }
  }
  out.detail << "30 solves, max energy dev " << fmt(worst_e) << " (< " << kEnergyTol
             << "), max force dev " << fmt(worst_f) << " (< " << kForceTol << ")";
  out.require(worst_e < kEnergyTol, "energy identity");
  out.require(worst_f < kForceTol, "force identity");
}

// 2. Forces are minus the energy gradient in both solvers.
void force_gradient(Outcome& out) {
  constexpr double kTol = 1e-6, kStep = 1e-5;
  const sw::DielectricSpec specs[5] = {{0.0, 0.0}, {0.6, 0.6}, {1.0, 1.0}, {0.9, -0.4}, {-1.0, 0.5}};
  double worst2 = 0.0, worst3 = 0.0;
  for (int k = 0; k < 5; ++k) {
    const auto system = hs::gen_system(100 + k, hs::default_composition(), kCell10);
    const auto p2 = sw::EwaldParams::from_splitting(6.0, 0.6, 0.0, 10);
    worst2 = std::max(worst2, sw::ewald2d::forces_fd_check(system, specs[k], p2, kStep));
    const auto p3 = sw::EwaldParams::from_splitting(5.0, 0.9, 12.0, 3);
    worst3 = std::max(worst3, sw::ewald3d::forces_fd_check(system, specs[k], p3, {true, true}, kStep));
  }
  out.detail << "max FD deviation: ewald2d " << fmt(worst2) << ", ewald3d " << fmt(worst3)
             << " (< " << kTol << ")";
  out.require(worst2 < kTol, "ewald2d gradient");
  out.require(worst3 < kTol, "ewald3d gradient");
}

// 3. Tuned (s, M, L_z) for L = 10, H = 1.
void table1(Outcome& out) {
  struct Row { double g, eps; int s, M; double Lz; };
  const Row rows[6] = {{0.6, 1e-4, 3, 9, 15},  {0.6, 1e-8, 4, 17, 30}, {0.6, 1e-12, 5, 25, 45},
                       {1.0, 1e-4, 3, 16, 32}, {1.0, 1e-8, 4, 31, 62}, {1.0, 1e-12, 5, 45, 91}};
  for (const auto& r : rows) {
    sw::tuner::ToleranceRequest req;
    req.epsilon = r.eps;
    req.geometry = kCell10;
    req.spec = sw::DielectricSpec(r.g, r.g);
    const auto t = sw::tuner::select_all(req);
    out.detail << " (" << r.g << "," << r.eps << ")->(" << t.params.s << "," << t.params.M << ","
               << t.params.L_z << " vs " << r.Lz << ")";
    out.require(t.params.s == r.s, "s for gamma " + fmt(r.g) + " eps " + fmt(r.eps));
    out.require(t.params.M == r.M, "M for gamma " + fmt(r.g) + " eps " + fmt(r.eps));
    out.require(std::abs(t.params.L_z - r.Lz) <= 1.0, "L_z within 1 for gamma " + fmt(r.g) + " eps " + fmt(r.eps));
  }
}

hs::SweepConfig base_config(const std::string& name, sw::Cell cell, double g) {
  hs::SweepConfig c;
  c.name = name;
  c.cell = cell;
  c.spec = sw::DielectricSpec(g, g);
  return c;
}

std::vector<double> grid(double a, double b, double step = 1.0) {
  std::vector<double> v;
  for (double x = a; x <= b + 1e-9; x += step) v.push_back(x);
  return v;
}

// 4. Truncated image series: force error decay per half-level.
void fig1_rates(Outcome& out) {
  constexpr double kRelTol = 0.10;
  struct Case { double g, H, M_max; };
  const Case cases[5] = {{1.0, 0.5, 60}, {1.0, 1.0, 40}, {1.0, 5.0, 12}, {0.3, 1.0, 16}, {0.6, 1.0, 24}};
  for (const auto& cs : cases) {
    auto c = base_config("fig1", sw::Cell{10.0, 10.0, cs.H}, cs.g);
    c.values = grid(1, cs.M_max);
    const auto res = hs::run_sweep(c);
    const auto fit = hs::fit_decay(res, hs::FitModel::exp_in_M);
    const double theory = std::log(cs.g * cs.g) - 4.0 * std::numbers::pi * cs.H / 10.0;
    const double dev = std::abs(fit.rate / theory - 1.0);
    out.detail << " g=" << cs.g << ",H=" << cs.H << ": " << fmt(fit.rate) << " vs " << fmt(theory);
    out.require(dev <= kRelTol, "rate for gamma " + fmt(cs.g) + " H " + fmt(cs.H));
  }
}

// 5. Homogeneous slab: error decay in the padding ratio, independent of H.
void fig2_rates(Outcome& out) {
  constexpr double kRelTol = 0.05, kCollapse = 3.0;
  const double Hs[3] = {0.5, 1.0, 5.0};
  std::vector<hs::SweepResult> results;
  for (double H : Hs) {
    auto c = base_config("fig2", sw::Cell{10.0, 10.0, H}, 0.0);
    c.sweep = hs::SweepVar::P;
    c.approx = hs::Approx::ewald3d;
    c.values = grid(0.25, 4.0, 0.25);
    results.push_back(hs::run_sweep(c));
    const auto fit = hs::fit_decay(results.back(), hs::FitModel::exp_in_P);
    const double theory = -2.0 * std::numbers::pi;
    out.detail << " H=" << H << ": " << fmt(fit.rate);
    out.require(std::abs(fit.rate / theory - 1.0) <= kRelTol, "P-rate for H " + fmt(H));
  }
  double worst = 1.0;
  for (std::size_t k = 0; k < results[0].rows.size(); ++k) {
    double lo = INFINITY, hi = 0.0;
    for (const auto& r : results) {
      lo = std::min(lo, r.rows[k].rel_err);
      hi = std::max(hi, r.rows[k].rel_err);
    }
    worst = std::max(worst, hi / lo);
  }
  out.detail << "; max pointwise spread across H " << fmt(worst) << " (<= " << kCollapse << ")";
  out.require(worst <= kCollapse, "H-independence");
}

// 6. Amplifying regime without layer correction: interior minimum in M,
// then growth at (1/2) log|g_u g_d| per level.
void fig4_minimum(Outcome& out) {
  constexpr double kRelTol = 0.15;
  const double H = 0.5, L = 10.0;
  const double g = sw::errors::amplification(1.0, H, L, L);
  const double theory = 0.5 * std::log(g * g);
  int previous_min = -1;
  for (double P : {1.0, 3.0, 5.0}) {
    auto c = base_config("fig4", sw::Cell{L, L, H}, 1.0);
    c.approx = hs::Approx::ewald3d;
    c.P = P;
    c.values = grid(1, P == 1.0 ? 40 : (P == 3.0 ? 80 : 120));
    const auto res = hs::run_sweep(c);
    std::size_t imin = 0;
    for (std::size_t k = 1; k < res.rows.size(); ++k) {
      if (res.rows[k].rel_err < res.rows[imin].rel_err) imin = k;
    }
    const bool interior = imin > 0 && imin + 1 < res.rows.size();
    const int m_min = static_cast<int>(res.rows[imin].value);
    // Growth window: three levels past the minimum (away from the sign
    // change) up to the first point at relative error 1.
    std::vector<double> x, y;
    for (std::size_t k = imin; k < res.rows.size(); ++k) {
      const auto& r = res.rows[k];
      if (r.value < m_min + 3) continue;
      if (!(r.rel_err < 1.0)) break;
      x.push_back(r.value);
      y.push_back(r.rel_err);
    }
    double rate = NAN;
    try {
      rate = hs::fit_exponential(x, y).rate;
    } catch (const sw::numerical_error&) {
    }
    out.detail << " P=" << P << ": min at M=" << m_min << ", growth " << fmt(rate) << " vs " << fmt(theory);
    out.require(interior, "interior minimum for P " + fmt(P));
    out.require(std::abs(rate / theory - 1.0) <= kRelTol, "growth rate for P " + fmt(P));
    out.require(m_min > previous_min, "minimum shifts right at P " + fmt(P));
    previous_min = m_min;
  }
}

// 7. Energy error = truncation term + layer term; the two-weight model beats
// either term alone.
void fig5_composite(Outcome& out) {
  constexpr double kGain = 2.0;
  const double L = 15.0, H = 5.0;
  for (double g : {0.6, 0.95, 1.0}) {
    for (double Lz : {45.0, 75.0, 105.0}) {
      auto c = base_config("fig5", sw::Cell{L, L, H}, g);
      c.approx = hs::Approx::ewald3d;
      c.quantity = hs::Quantity::energy;
      c.Lz = Lz;
      // Image levels that still fit inside the padded box.
      c.values = grid(1, Lz / H - 1);
      const auto res = hs::run_sweep(c);
      std::vector<double> y, t1, t2;
      for (const auto& r : res.rows) {
        const int M = static_cast<int>(r.value);
        y.push_back(r.rel_err);
        t1.push_back(sw::errors::image_truncation_energy(M, g, g, H, L, L));
        t2.push_back(sw::errors::elc_energy_estimate(M, g, g, H, L, L, Lz));
      }
      const auto comp = hs::fit_composite(y, t1, t2);
      const auto only1 = hs::fit_scaled(y, t1);
      const auto only2 = hs::fit_scaled(y, t2);
      const double best_single = std::min(only1.residual, only2.residual);
      out.detail << " g=" << g << ",Lz=" << Lz << ": " << fmt(comp.residual) << "/" << fmt(only1.residual)
                 << "/" << fmt(only2.residual);
      if (g > 0.9) {
        out.require(kGain * comp.residual <= best_single,
                    "composite gain for gamma " + fmt(g) + " Lz " + fmt(Lz));
      }
    }
  }
}

// 8. Tuned parameters deliver the requested force accuracy.
void tuner_achievement(Outcome& out) {
  constexpr double kFactor = 10.0;
  const auto system = hs::gen_system(1, hs::default_composition(), kCell10);
  for (double g : {0.6, 1.0}) {
    const sw::DielectricSpec spec(g, g);
    const int M_ref = hs::reference_M(spec, kCell10);
    const auto ref = sw::ewald2d::energy_icm(system, spec, hs::reference_params(kCell10, M_ref));
    for (double eps : {1e-4, 1e-8, 1e-12}) {
      sw::tuner::ToleranceRequest req;
      req.epsilon = eps;
      req.geometry = kCell10;
      req.spec = spec;
      const auto t = sw::tuner::select_all(req);
      const auto approx = sw::ewald3d::solve(system, spec, t.params, {true, false});
      const double err = hs::force_rel_error(approx.forces, ref.forces);
      out.detail << " (" << g << "," << eps << "): " << fmt(err);
      out.require(err <= kFactor * eps, "accuracy for gamma " + fmt(g) + " eps " + fmt(eps));
    }
  }
}

// 9. Structural properties.
void properties(Outcome& out) {
  const auto system = hs::gen_system(3, hs::default_composition(), kCell10);

  // Image lists for M are prefixes of those for M + 1.
  bool prefix = true;
  const sw::DielectricSpec s1(0.7, -0.4);
  for (int M = 0; M < 12; ++M) {
    const auto a = sw::image_series(system, s1, M), b = sw::image_series(system, s1, M + 1);
    prefix = prefix && a.size() <= b.size();
    for (std::size_t k = 0; prefix && k < a.size(); ++k) {
      prefix = a[k].position.z == b[k].position.z && a[k].charge == b[k].charge;
    }
  }
  out.require(prefix, "image prefix");

  // gamma = 0 reduces to the homogeneous sum for any M.
  const auto p = sw::EwaldParams::from_splitting(6.0, 0.6, 0.0, 7);
  const double e0 = sw::ewald2d::energy_icm(system, sw::DielectricSpec{}, p).energy;
  const double eh = sw::ewald2d::energy_homogeneous(system, p).energy;
  const double red = std::abs(e0 - eh) / std::abs(eh);
  out.require(red <= 1e-14, "gamma = 0 reduction");

  // One-sided dielectric: no reflections beyond the first level.
  const sw::DielectricSpec one(0.9, 0.0);
  const double m1 = sw::ewald2d::energy_icm(system, one, p.with_M(1)).energy;
  const double m5 = sw::ewald2d::energy_icm(system, one, p.with_M(5)).energy;
  const double case2 = std::abs(m1 - m5) / std::abs(m5);
  out.require(case2 <= 1e-14, "one-sided M = 1 exactness");

  // The reference energy does not depend on alpha.
  const sw::DielectricSpec s6(0.6, 0.6);
  const double a0 = 0.6;
  const double base = sw::ewald2d::energy_icm(system, s6, sw::EwaldParams::from_splitting(6.0, a0, 0.0, 20)).energy;
  double alpha_dev = 0.0;
  for (double f : {1.5, 2.0, 3.0, 4.0}) {
    const double e =
        sw::ewald2d::energy_icm(system, s6, sw::EwaldParams::from_splitting(6.0, f * a0, 0.0, 20)).energy;
    alpha_dev = std::max(alpha_dev, std::abs(e - base) / std::abs(base));
  }
  out.require(alpha_dev <= 1e-9, "alpha independence");

  // Homogeneous forces sum to zero.
  const auto fh = sw::ewald2d::energy_homogeneous(system, p);
  sw::Vec3 net{};
  double fmax = 0.0;
  for (const auto& f : fh.forces) {
    net = net + f;
    fmax = std::max(fmax, sw::norm(f));
  }
  const double net_rel = sw::norm(net) / fmax;
  out.require(net_rel <= 1e-10, "zero net force");

  // Factorized k = 0 correction equals its pair-sum definition.
  const auto p3 = sw::EwaldParams::from_splitting(5.0, 0.9, 14.0, 4);
  const double yb = sw::ewald3d::yb_correction(system, s6, p3).energy;
  const auto images = sw::image_series(system, s6, 4);
  const double V = kCell10.area() * 14.0;
  std::vector<double> terms;
  for (std::size_t i = 0; i < system.size(); ++i) {
    auto add = [&](double q, double z) {
      const double dz = system.position(i).z - z;
      terms.push_back(-(std::numbers::pi / V) * system.charge(i) * q * dz * dz);
    };
    for (std::size_t j = 0; j < system.size(); ++j) add(system.charge(j), system.position(j).z);
    for (const auto& img : images) add(img.charge, img.position.z);
  }
  const double yb_direct = sw::compensated_sum(terms);
  const double yb_dev = std::abs(yb - yb_direct) / std::abs(yb_direct);
  out.require(yb_dev <= 1e-13, "YB O(N) = O(N^2)");

  // Layer-correction kernel stays finite for h L_z up to 1e4 and |d| <= L_z,
  // and so does a full correction with L_z barely above the images.
  bool finite = true;
  for (double hLz : {1e-6, 1.0, 50.0, 709.0, 800.0, 5e3, 1e4}) {
    for (double Lz : {1.5, 30.0, 1e3}) {
      const double h = hLz / Lz;
      for (double f : {-1.0, -0.5, 0.0, 0.3, 1.0}) {
        const auto k = sw::ewald3d::elc_kernel(h, f * Lz, Lz);
        finite = finite && std::isfinite(k.value) && std::isfinite(k.dz);
      }
    }
  }
  const auto tight = sw::EwaldParams::from_splitting(5.0, 2.0, 5.5, 4);
  const auto elc = sw::ewald3d::elc_correction(system, s6, tight);
  finite = finite && std::isfinite(elc.energy);
  for (const auto& f : elc.forces) finite = finite && std::isfinite(f.x) && std::isfinite(f.y) && std::isfinite(f.z);
  out.require(finite, "ELC finite at large h L_z");

  out.detail << "gamma0 " << fmt(red) << ", one-sided " << fmt(case2) << ", alpha " << fmt(alpha_dev)
             << ", net force " << fmt(net_rel) << ", YB " << fmt(yb_dev) << ", ELC finite " << finite;
}

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int k = 1; k < argc; ++k) {
    const std::string a = argv[k];
    if (a == "--criterion" && k + 1 < argc) {
      only = std::atoi(argv[++k]);
    } else {
      std::fprintf(stderr, "usage: acceptance [--criterion N]\n");
      return 64;
    }
  }
  const std::vector<Criterion> all = {
      {1, "cross-solver identity", 60, cross_solver},
      {2, "force-gradient consistency", 30, force_gradient},
      {3, "tuned parameter table", 1, table1},
      {4, "image truncation decay rates", 300, fig1_rates},
      {5, "padding decay rate and H-independence", 300, fig2_rates},
      {6, "non-monotone error in M", 300, fig4_minimum},
      {7, "composite error model", 600, fig5_composite},
      {8, "tuner achievement", 300, tuner_achievement},
      {9, "property suite", 60, properties},
  };
  int failures = 0;
  for (const auto& c : all) {
    if (only != 0 && c.id != only) continue;
    Outcome out;
    const auto start = std::chrono::steady_clock::now();
    try {
      c.run(out);
    } catch (const std::exception& e) {
      out.pass = false;
      out.detail << " [exception: " << e.what() << "]";
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (secs > c.time_limit_s) {
      out.pass = false;
      out.detail << " [over time limit " << c.time_limit_s << " s]";
    }
    std::printf("criterion %d (%s): %s  %.2f s  %s\n", c.id, c.name, out.pass ? "PASS" : "FAIL", secs,
                out.detail.str().c_str());
    std::fflush(stdout);
    if (!out.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
