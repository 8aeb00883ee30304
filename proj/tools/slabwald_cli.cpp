// slabwald command line: single-shot energies and forces, parameter tuning,
// error sweeps, system generation.
//
// Exit status: 0 success, 1 invalid input, 2 numerical failure, 64 usage.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "slabwald/harness/config.hpp"
#include "slabwald/harness/fit.hpp"
#include "slabwald/harness/generate.hpp"
#include "slabwald/harness/sweep.hpp"
#include "slabwald/slabwald.hpp"

namespace sw = slabwald;
namespace hs = slabwald::harness;

namespace {

struct SolveOptions {
  std::string file;
  std::optional<double> gamma, gamma_u, gamma_d;
  std::optional<int> M;
  double s = 6.0;
  std::optional<double> alpha;
  std::string solver = "ewald2d";
  std::optional<double> Lz;
  bool no_yb = false;
  bool no_elc = false;
};

void add_solve_flags(CLI::App* cmd, SolveOptions& o) {
  cmd->add_option("system", o.file, "system file (cell header, then x y z q per line)")
      ->required();
  cmd->add_option("--gamma", o.gamma, "reflection factor of both interfaces");
  cmd->add_option("--gamma-u", o.gamma_u, "reflection factor at z = H");
  cmd->add_option("--gamma-d", o.gamma_d, "reflection factor at z = 0");
  cmd->add_option("--M", o.M, "image truncation level (default: converged to 1e-15)");
  cmd->add_option("--s", o.s, "splitting accuracy s = alpha r_c");
  cmd->add_option("--alpha", o.alpha, "splitting parameter");
  cmd->add_option("--solver", o.solver, "ewald2d or ewald3d")
      ->check(CLI::IsMember({"ewald2d", "ewald3d"}));
  cmd->add_option("--Lz", o.Lz, "padded box height (ewald3d)");
  cmd->add_flag("--no-yb", o.no_yb, "drop the Yeh-Berkowitz term (ewald3d)");
  cmd->add_flag("--no-elc", o.no_elc, "drop the layer correction (ewald3d)");
}

sw::DielectricSpec spec_from(const std::optional<double>& both, const std::optional<double>& up,
                             const std::optional<double>& down) {
  const double gu = up.value_or(both.value_or(0.0));
  const double gd = down.value_or(both.value_or(0.0));
  try {
    return sw::DielectricSpec(gu, gd);
  } catch (const std::domain_error& e) {
    throw sw::validation_error(e.what());
  }
}

sw::EnergyForces run_solve(const SolveOptions& o, const sw::ChargeSystem& system) {
  const sw::DielectricSpec spec = spec_from(o.gamma, o.gamma_u, o.gamma_d);
  const sw::Cell& cell = system.cell();
  const int M = o.M.value_or(hs::reference_M(spec, cell));
  if (o.solver == "ewald2d") {
    const double alpha = o.alpha.value_or(o.s / cell.min_period());
    return sw::ewald2d::energy_icm(system, spec, sw::EwaldParams::from_splitting(o.s, alpha, 0.0, M));
  }
  double Lz = 0.0;
  if (o.Lz) {
    Lz = *o.Lz;
  } else {
    sw::tuner::ToleranceRequest req;
    req.epsilon = 1e-12;
    req.geometry = cell;
    req.spec = spec;
    Lz = sw::tuner::select_Lz(req, M);
  }
  const double alpha = o.alpha.value_or(hs::default_alpha_3d(cell, o.s, Lz, M));
  return sw::ewald3d::solve(system, spec, sw::EwaldParams::from_splitting(o.s, alpha, Lz, M),
                            {!o.no_yb, !o.no_elc});
}

void print_warnings(const sw::EnergyForces& r) {
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
}

void print_tune(const sw::tuner::TuneResult& t) {
  const auto& p = t.params;
  std::printf("s = %g\nM = %d\nL_z = %g (unrounded %.6f)\nalpha = %.10g\nr_c = %.10g\nk_c = %.10g\n",
              p.s, p.M, p.L_z, t.Lz_unrounded, p.alpha, p.r_c, p.k_c);
  const auto& b = t.budget;
  std::printf("regime = %s (g_u = %.6g, g_d = %.6g)\n", sw::errors::to_string(b.regime).c_str(),
              b.g_u, b.g_d);
  std::printf("budget: splitting %.3e  image_truncation %.3e  elc_base %.3e  elc_image %.3e  "
              "trapezoidal %.3e  total %.3e\n",
              b.splitting, b.image_truncation, b.elc_base, b.elc_image, b.trapezoidal, b.total());
  for (const auto& d : t.diagnostics) std::printf("note: %s\n", d.c_str());
}

int run(int argc, char** argv) {
  CLI::App app{"Electrostatics of dielectrically confined slabs: Ewald2D image-charge reference "
               "and padded Ewald3D with layer corrections."};
  app.require_subcommand(1);

  SolveOptions energy_opts;
  auto* energy = app.add_subcommand("energy", "total energy and its breakdown");
  add_solve_flags(energy, energy_opts);

  SolveOptions force_opts;
  auto* forces = app.add_subcommand("forces", "per-particle forces");
  add_solve_flags(forces, force_opts);

  sw::tuner::ToleranceRequest tune_req;
  std::optional<double> tg, tgu, tgd;
  std::string rounding = "ceil";
  auto* tune = app.add_subcommand("tune", "select M, L_z and the splitting for a tolerance");
  tune->add_option("--eps", tune_req.epsilon, "target tolerance")->required();
  tune->add_option("--gamma", tg, "reflection factor of both interfaces");
  tune->add_option("--gamma-u", tgu, "reflection factor at z = H");
  tune->add_option("--gamma-d", tgd, "reflection factor at z = 0");
  tune->add_option("--H", tune_req.geometry.H, "slab thickness")->required();
  tune->add_option("--Lx", tune_req.geometry.Lx, "period along x")->required();
  tune->add_option("--Ly", tune_req.geometry.Ly, "period along y")->required();
  tune->add_option("--rounding", rounding, "ceil or nearest")
      ->check(CLI::IsMember({"ceil", "nearest"}));
  tune->add_flag("--continuous-s", tune_req.continuous_s, "solve e^{-s^2}/s^2 = eps exactly");
  std::optional<double> rc_target;
  tune->add_option("--rc", rc_target, "real-space cutoff target (default min(Lx, Ly)/4)");

  std::string config_file, out_path, scenario;
  bool fit = false;
  auto* sweep = app.add_subcommand("sweep", "run error sweeps from a scenario file, write CSV");
  sweep->add_option("config", config_file, "scenario file")->required();
  sweep->add_option("--out", out_path, "output file, or directory (one CSV per scenario)");
  sweep->add_option("--scenario", scenario, "run only this scenario");
  sweep->add_flag("--fit", fit, "report exponential fits on stderr");

  auto* table1 = app.add_subcommand("table1", "tuned parameters for L = 10, H = 1");

  std::uint64_t seed = 1;
  std::string composition = "13:2,26:-1", gen_out;
  sw::Cell gen_cell{10.0, 10.0, 1.0};
  auto* gen = app.add_subcommand("gen", "write a seeded random system file");
  gen->add_option("--seed", seed, "generator seed")->required();
  gen->add_option("--Lx", gen_cell.Lx, "period along x");
  gen->add_option("--Ly", gen_cell.Ly, "period along y");
  gen->add_option("--H", gen_cell.H, "slab thickness");
  gen->add_option("--composition", composition, "count:valence list");
  gen->add_option("--out", gen_out, "output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 64;
  }

  if (energy->parsed() || forces->parsed()) {
    const auto& o = energy->parsed() ? energy_opts : force_opts;
    const auto system = sw::read_system_file(o.file);
    const auto r = run_solve(o, system);
    print_warnings(r);
    if (energy->parsed()) {
      std::printf("energy %s\n", sw::format_double(r.energy).c_str());
      for (const auto& [k, v] : r.breakdown) std::printf("  %s %s\n", k.c_str(), sw::format_double(v).c_str());
    } else {
      for (std::size_t i = 0; i < r.forces.size(); ++i) {
        std::printf("%zu %s %s %s\n", i, sw::format_double(r.forces[i].x).c_str(),
                    sw::format_double(r.forces[i].y).c_str(), sw::format_double(r.forces[i].z).c_str());
      }
    }
  } else if (tune->parsed()) {
    tune_req.spec = spec_from(tg, tgu, tgd);
    tune_req.rounding = rounding == "ceil" ? sw::tuner::Rounding::ceil : sw::tuner::Rounding::nearest;
    tune_req.r_c_target = rc_target;
    print_tune(sw::tuner::select_all(tune_req));
  } else if (sweep->parsed()) {
    auto configs = hs::parse_config_file(config_file);
    if (!scenario.empty()) {
      std::erase_if(configs, [&](const hs::SweepConfig& c) { return c.name != scenario; });
      if (configs.empty()) throw sw::validation_error("no scenario named '" + scenario + "'");
    }
    const bool to_dir = !out_path.empty() && std::filesystem::is_directory(out_path);
    if (configs.size() > 1 && !to_dir) {
      throw sw::validation_error("several scenarios need --out pointing at a directory");
    }
    for (const auto& c : configs) {
      const auto result = hs::run_sweep(c);
      for (const auto& row : result.rows) {
        if (!row.failure.empty()) std::cerr << c.name << ": value " << row.value << ": " << row.failure << '\n';
      }
      if (out_path.empty()) {
        hs::write_csv(std::cout, result);
      } else {
        const std::string path = to_dir ? (std::filesystem::path(out_path) / (c.name + ".csv")).string() : out_path;
        std::ofstream out(path);
        if (!out) throw sw::validation_error("cannot write '" + path + "'");
        hs::write_csv(out, result);
      }
      if (fit) {
        const auto model = c.sweep == hs::SweepVar::M ? hs::FitModel::exp_in_M : hs::FitModel::exp_in_P;
        try {
          const auto f = hs::fit_decay(result, model);
          std::cerr << c.name << ": rate " << f.rate << " prefactor " << f.prefactor << " residual "
                    << f.residual << " over " << f.points << " points\n";
        } catch (const sw::numerical_error& e) {
          std::cerr << c.name << ": " << e.what() << '\n';
        }
      }
    }
  } else if (table1->parsed()) {
    std::printf("%-6s %-7s %3s %4s %5s %12s\n", "gamma", "eps", "s", "M", "L_z", "alpha");
    for (double g : {0.6, 1.0}) {
      for (double eps : {1e-4, 1e-8, 1e-12}) {
        sw::tuner::ToleranceRequest req;
        req.epsilon = eps;
        req.geometry = sw::Cell{10.0, 10.0, 1.0};
        req.spec = sw::DielectricSpec(g, g);
        const auto t = sw::tuner::select_all(req);
        std::printf("%-6g %-7g %3g %4d %5g %12.6g\n", g, eps, t.params.s, t.params.M, t.params.L_z,
                    t.params.alpha);
      }
    }
  } else if (gen->parsed()) {
    const auto system = hs::gen_system(seed, hs::parse_composition(composition), gen_cell);
    if (gen_out.empty()) {
      sw::write_system(std::cout, system);
    } else {
      std::ofstream out(gen_out);
      if (!out) throw sw::validation_error("cannot write '" + gen_out + "'");
      sw::write_system(out, system);
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const sw::validation_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const sw::numerical_error& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 2;
  } catch (const std::domain_error& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
