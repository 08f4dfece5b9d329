#include <chrono>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "nlslab/constants.hpp"
#include "nlslab/dynamics.hpp"
#include "nlslab/errors.hpp"
#include "nlslab/field.hpp"
#include "nlslab/ground_state.hpp"
#include "nlslab/io.hpp"
#include "nlslab/landscape.hpp"
#include "nlslab/model.hpp"
#include "nlslab/stability.hpp"
#include "nlslab/version.hpp"

namespace {

using nlslab::format_g17;

constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitIo = 4;

struct CommonConfig {
  nlslab::ModelParams params;
  std::string out_dir;
  std::string cache;  // sharp-constants cache file ("" = <out>/sharp_constants.txt)
  std::string stamp;  // logical timestamp recorded in sidecars
  std::uint64_t seed = 1;
};

std::string resolve_out_dir(const std::string& flag_value) {
  if (!flag_value.empty()) return flag_value;
  if (const char* env = std::getenv("NLSLAB_OUT_DIR"); env && *env) return env;
  return "out";
}

nlslab::LandscapeConstants load_landscape(const CommonConfig& cfg) {
  const std::string cache =
      cfg.cache.empty() ? cfg.out_dir + "/sharp_constants.txt" : cfg.cache;
  return nlslab::landscape_constants(cfg.params,
                                     std::filesystem::path(cache));
}

nlohmann::json constants_block(const nlslab::LandscapeConstants& lc) {
  return {{"sobolev", lc.sobolev.value},
          {"gn", lc.gn.value},
          {"gn_beta", lc.gn.beta},
          {"K", lc.K},
          {"c0", lc.c0},
          {"rho0", lc.rho0},
          {"beta0", lc.beta0}};
}

nlohmann::json params_block(const nlslab::ModelParams& p) {
  return {{"N", p.N}, {"q", p.q}, {"mu", p.mu}};
}

// Shared manifest scaffolding: runs the body, then writes the manifest; on
// failure the manifest is still written, marked partial, before rethrow.
template <typename Body>
void with_manifest(const CommonConfig& cfg, const std::string& subcommand,
                   nlohmann::json config_echo, Body&& body) {
  const auto t0 = std::chrono::steady_clock::now();
  nlslab::OutputTracker tracker(cfg.out_dir);
  nlslab::RunManifest manifest;
  config_echo["subcommand"] = subcommand;
  config_echo["params"] = params_block(cfg.params);
  config_echo["seed"] = cfg.seed;
  config_echo["stamp"] = cfg.stamp;
  manifest.config = std::move(config_echo);
  manifest.version = nlslab::kVersion;
  try {
    body(tracker, manifest);
  } catch (const std::exception& e) {
    manifest.partial = true;
    manifest.error = e.what();
    manifest.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    tracker.finalize(manifest);
    throw;
  }
  manifest.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  tracker.finalize(manifest);
}

nlohmann::json provenance_block(const CommonConfig& cfg,
                                const nlohmann::json& config_echo) {
  return {{"tool", nlslab::kToolName},
          {"version", nlslab::kVersion},
          {"config_digest", nlslab::sha256_hex(config_echo.dump())},
          {"seed", cfg.seed}};
}

// ------------------------------------------------------------ subcommands

void cmd_constants(const CommonConfig& cfg) {
  nlslab::validate(cfg.params);
  with_manifest(cfg, "constants", {}, [&](nlslab::OutputTracker& tracker,
                                          nlslab::RunManifest& manifest) {
    const nlslab::LandscapeConstants lc = load_landscape(cfg);
    manifest.constants = constants_block(lc);
    nlohmann::json report{{"params", params_block(cfg.params)},
                          {"sobolev_constant", lc.sobolev.value},
                          {"gn_constant", lc.gn.value},
                          {"gn_beta", lc.gn.beta},
                          {"exponents",
                           {{"alpha0", lc.exps.alpha0},
                            {"alpha1", lc.exps.alpha1},
                            {"alpha2", lc.exps.alpha2}}},
                          {"K", lc.K},
                          {"c0", lc.c0},
                          {"rho0", lc.rho0},
                          {"beta0", lc.beta0}};
    tracker.emit("constants.json", report.dump(2) + "\n");
  });
}

void cmd_landscape(const CommonConfig& cfg, std::vector<double> cs) {
  nlslab::validate(cfg.params);
  nlohmann::json echo{{"c", cs}};
  with_manifest(cfg, "landscape", echo, [&](nlslab::OutputTracker& tracker,
                                            nlslab::RunManifest& manifest) {
    const nlslab::LandscapeConstants lc = load_landscape(cfg);
    manifest.constants = constants_block(lc);
    if (cs.empty()) {
      for (int i = 0; i < 16; ++i)
        cs.push_back(lc.c0 * (0.05 + 0.9 * i / 15.0));
    }
    std::vector<std::vector<double>> rows;
    for (double c : cs) {
      if (!(c > 0.0) || !(c < lc.c0))
        throw nlslab::validation_error(
            "landscape: c = " + format_g17(c) +
            " outside (0, c0); the threshold mass is c0 = " + format_g17(lc.c0));
      const double rho_c = nlslab::rho_max(cfg.params, lc, c);
      const double max_g = nlslab::landscape_f(cfg.params, lc, c, rho_c);
      const double f_rho0 = nlslab::landscape_f(cfg.params, lc, c, lc.rho0);
      rows.push_back({c, rho_c, max_g, f_rho0});
    }
    tracker.emit("landscape.csv",
                 nlslab::table_csv({"c", "rho_c", "max_g", "f_at_rho0"}, rows));
  });
}

void cmd_ground_state(const CommonConfig& cfg, double c,
                      const nlslab::SolverOptions& opts) {
  nlslab::validate(cfg.params);
  nlohmann::json echo{{"c", c},
                      {"rmax", opts.rmax},
                      {"n", opts.n},
                      {"tol", opts.tol},
                      {"max_iters", opts.max_iters},
                      {"s_init", opts.s_init}};
  with_manifest(cfg, "ground-state", echo, [&](nlslab::OutputTracker& tracker,
                                               nlslab::RunManifest& manifest) {
    const nlslab::LandscapeConstants lc = load_landscape(cfg);
    manifest.constants = constants_block(lc);
    const nlslab::GroundStateResult res =
        nlslab::minimize_local(cfg.params, lc, c, opts);
    if (!res.converged)
      throw nlslab::numerical_error("ground-state did not converge: " +
                                    res.diagnostics);
    nlohmann::json report{{"c", c},
                          {"m_c", res.m_c},
                          {"lambda", res.lambda},
                          {"pohozaev_residual", res.pohozaev_residual},
                          {"residual", res.residual},
                          {"grad_cap_ok", res.grad_cap_ok},
                          {"iterations", res.iterations},
                          {"converged", res.converged}};
    tracker.emit("ground_state.json", report.dump(2) + "\n");
    tracker.emit("ground_state.fld", nlslab::snapshot_bytes(res.field));
    tracker.emit("ground_state.fld.json",
                 nlslab::snapshot_sidecar(res.field, cfg.params, cfg.stamp,
                                          provenance_block(cfg, manifest.config))
                         .dump(2) +
                     "\n");
  });
}

void cmd_evolve(const CommonConfig& cfg, const std::string& datum, double T,
                double dt, int stride, double ceiling, int snap_every) {
  nlslab::validate(cfg.params);
  nlohmann::json echo{{"datum", datum}, {"T", T},      {"dt", dt},
                      {"stride", stride}, {"ceiling", ceiling},
                      {"snap_every", snap_every}};
  with_manifest(cfg, "evolve", echo, [&](nlslab::OutputTracker& tracker,
                                         nlslab::RunManifest& manifest) {
    const nlslab::FieldState phi = nlslab::read_snapshot(datum);
    nlslab::EvolveOptions opts;
    opts.sample_stride = stride;
    opts.blowup_gradient = ceiling;
    const nlslab::EvolveResult res =
        nlslab::evolve_splitstep(phi, cfg.params, T, dt, opts);
    tracker.emit("trace.csv", nlslab::trace_csv(res.trace));
    tracker.emit("final.fld", nlslab::snapshot_bytes(res.final_state));
    tracker.emit("final.fld.json",
                 nlslab::snapshot_sidecar(res.final_state, cfg.params, cfg.stamp,
                                          provenance_block(cfg, manifest.config))
                         .dump(2) +
                     "\n");
    nlohmann::json report{{"blowup", res.trace.blowup},
                          {"note", res.trace.note},
                          {"samples", res.trace.times.size()}};
    tracker.emit("evolve.json", report.dump(2) + "\n");
    if (snap_every > 0) {
      // Re-run sampling writes would double compute; snapshots of the final
      // state are emitted above. Periodic snapshots re-evolve in chunks.
      nlslab::FieldState state = phi;
      int index = 0;
      const double chunk = dt * stride * snap_every;
      for (double t = chunk; t < T + 0.5 * dt; t += chunk) {
        const double span = std::min(chunk, T - (t - chunk));
        if (span <= 0.0) break;
        const nlslab::EvolveResult part =
            nlslab::evolve_splitstep(state, cfg.params, span, dt, opts);
        state = part.final_state;
        tracker.emit("snap_" + std::to_string(index) + ".fld",
                     nlslab::snapshot_bytes(state));
        ++index;
        if (part.trace.blowup) break;
      }
    }
    if (res.trace.blowup) {
      manifest.partial = true;
      manifest.error = res.trace.note;
    }
  });
}

void cmd_strichartz(const CommonConfig& cfg, const std::string& datum, double T,
                    int nodes, double gauss_a, double gauss_amp, double L,
                    int n) {
  nlslab::validate(cfg.params);
  nlohmann::json echo{{"datum", datum}, {"T", T},          {"nodes", nodes},
                      {"gauss_a", gauss_a}, {"gauss_amp", gauss_amp},
                      {"L", L},           {"n", n}};
  with_manifest(cfg, "strichartz", echo, [&](nlslab::OutputTracker& tracker,
                                             nlslab::RunManifest&) {
    nlslab::FieldState phi = [&] {
      if (!datum.empty()) return nlslab::read_snapshot(datum);
      nlslab::BoxGrid box{cfg.params.N, L, n};
      nlslab::FieldState g = nlslab::zero_field(nlslab::Grid{box});
      std::size_t pos = 0;
      for (int i0 = 0; i0 < box.n; ++i0)
        for (int i1 = 0; i1 < box.n; ++i1)
          for (int i2 = 0; i2 < box.n; ++i2, ++pos) {
            const double x0 = -box.L / 2 + box.h() * i0;
            const double x1 = -box.L / 2 + box.h() * i1;
            const double x2 = -box.L / 2 + box.h() * i2;
            g.values[pos] =
                gauss_amp * std::exp(-gauss_a * (x0 * x0 + x1 * x1 + x2 * x2));
          }
      return g;
    }();
    const nlslab::StrichartzReport rep =
        nlslab::strichartz_report(phi, cfg.params, T, nodes);
    nlohmann::json out{
        {"pair1", {{"p", rep.pair1.p}, {"r", rep.pair1.r}, {"sigma", rep.sigma1}}},
        {"pair2", {{"p", rep.pair2.p}, {"r", rep.pair2.r}, {"sigma", rep.sigma2}}},
        {"Y1", rep.Y1}, {"X1", rep.X1},
        {"Y2", rep.Y2}, {"X2", rep.X2},
        {"Y", rep.Y},   {"X", rep.X},
        {"T", T}};
    tracker.emit("strichartz.json", out.dump(2) + "\n");
  });
}

void cmd_stability(const CommonConfig& cfg, const std::string& gs_path,
                   std::vector<double> deltas, int trials, double T_sim,
                   double dt, const std::string& kind_name, double L, int n,
                   double window) {
  nlslab::validate(cfg.params);
  nlohmann::json echo{{"gs", gs_path}, {"deltas", deltas}, {"trials", trials},
                      {"T_sim", T_sim}, {"dt", dt},        {"kind", kind_name},
                      {"L", L},         {"n", n},          {"window", window}};
  with_manifest(cfg, "stability", echo, [&](nlslab::OutputTracker& tracker,
                                            nlslab::RunManifest& manifest) {
    const nlslab::LandscapeConstants lc = load_landscape(cfg);
    manifest.constants = constants_block(lc);
    nlslab::GroundStateResult gs;
    gs.field = nlslab::read_snapshot(gs_path);
    gs.converged = true;
    nlslab::ExperimentOptions opts;
    opts.box = nlslab::BoxGrid{cfg.params.N, L, n};
    opts.window = window;
    const nlslab::PerturbationKind kind =
        nlslab::perturbation_kind_from_string(kind_name);
    const nlslab::SweepResult sweep = nlslab::sweep_delta(
        gs, deltas, cfg.params, lc, T_sim, dt, trials, opts, kind);
    std::vector<std::vector<double>> rows;
    for (const nlslab::StabilityReport& r : sweep.runs)
      rows.push_back({r.delta, static_cast<double>(r.seed), r.initial_distance,
                      r.sup_distance, r.mass_drift, r.energy_drift, r.sup_grad,
                      static_cast<double>(r.grad_cap_violated),
                      static_cast<double>(r.blowup),
                      static_cast<double>(r.windows_completed)});
    tracker.emit("stability_runs.csv",
                 nlslab::table_csv({"delta", "seed", "dist0", "sup_dist",
                                    "mass_drift", "energy_drift", "sup_grad",
                                    "cap_violated", "blowup", "windows"},
                                   rows));
    nlohmann::json trend = nlohmann::json::array();
    for (const auto& [delta, worst] : sweep.worst)
      trend.push_back({{"delta", delta}, {"worst_sup_distance", worst}});
    nlohmann::json summary{{"trend", trend},
                           {"caveat", sweep.runs.empty() ? "" : sweep.runs[0].caveat}};
    tracker.emit("stability_summary.json", summary.dump(2) + "\n");
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical laboratory for a mass-constrained Sobolev-critical "
               "Schroedinger equation"};
  app.set_config("--config", "", "Structured config file (INI/TOML); flags override");
  app.require_subcommand(1);

  CommonConfig cfg;
  std::string out_flag;
  app.add_option("--N", cfg.params.N, "space dimension (>= 3)")
      ->capture_default_str();
  app.add_option("--q", cfg.params.q, "subcritical power in (2, 2+4/N)")
      ->capture_default_str();
  app.add_option("--mu", cfg.params.mu, "coupling (> 0)")->capture_default_str();
  app.add_option("--out", out_flag,
                 "output directory (or env NLSLAB_OUT_DIR; default ./out)");
  app.add_option("--cache", cfg.cache, "sharp-constants cache file");
  app.add_option("--stamp", cfg.stamp,
                 "logical timestamp recorded in snapshot metadata");
  app.add_option("--seed", cfg.seed, "base random seed")->capture_default_str();

  auto* c_const = app.add_subcommand("constants", "sharp constants and landscape numbers");

  auto* c_land = app.add_subcommand("landscape", "per-mass landscape table");
  std::vector<double> land_c;
  c_land->add_option("--c", land_c, "mass values (default: 16-point spread)");

  auto* c_gs = app.add_subcommand("ground-state", "local constrained minimizer");
  double gs_c = 0.0;
  nlslab::SolverOptions gs_opts;
  c_gs->add_option("--c", gs_c, "mass constraint in (0, c0)")->required();
  c_gs->add_option("--rmax", gs_opts.rmax, "radial extent")->capture_default_str();
  c_gs->add_option("--n", gs_opts.n, "radial intervals")->capture_default_str();
  c_gs->add_option("--tol", gs_opts.tol, "residual tolerance factor")
      ->capture_default_str();
  c_gs->add_option("--max-iters", gs_opts.max_iters, "iteration budget")
      ->capture_default_str();
  c_gs->add_option("--s-init", gs_opts.s_init,
                   "initial Gaussian dilation scale (<= 0: automatic)")
      ->capture_default_str();

  auto* c_ev = app.add_subcommand("evolve", "split-step evolution of a snapshot");
  std::string ev_datum;
  double ev_T = 1.0, ev_dt = 1e-3, ev_ceiling = 1e8;
  int ev_stride = 10, ev_snap_every = 0;
  c_ev->add_option("--datum", ev_datum, "field snapshot path")->required();
  c_ev->add_option("--T", ev_T, "final time")->capture_default_str();
  c_ev->add_option("--dt", ev_dt, "time step")->capture_default_str();
  c_ev->add_option("--stride", ev_stride, "steps between trace samples")
      ->capture_default_str();
  c_ev->add_option("--ceiling", ev_ceiling, "squared-gradient blow-up ceiling")
      ->capture_default_str();
  c_ev->add_option("--snap-every", ev_snap_every,
                   "emit a field snapshot every k samples (0 = off)")
      ->capture_default_str();

  auto* c_st = app.add_subcommand("strichartz", "space-time norms of the free evolution");
  std::string st_datum;
  double st_T = 0.5, st_a = 0.25, st_amp = 0.1, st_L = 30.0;
  int st_nodes = 64, st_n = 32;
  c_st->add_option("--datum", st_datum, "field snapshot (default: Gaussian)");
  c_st->add_option("--T", st_T, "time horizon")->capture_default_str();
  c_st->add_option("--nodes", st_nodes, "time quadrature nodes")
      ->capture_default_str();
  c_st->add_option("--gauss-a", st_a, "Gaussian width parameter")
      ->capture_default_str();
  c_st->add_option("--gauss-amp", st_amp, "Gaussian amplitude")
      ->capture_default_str();
  c_st->add_option("--L", st_L, "box edge for the default datum")
      ->capture_default_str();
  c_st->add_option("--n", st_n, "box nodes per axis for the default datum")
      ->capture_default_str();

  auto* c_sb = app.add_subcommand("stability", "perturb-and-evolve delta sweep");
  std::string sb_gs, sb_kind = "random-h1";
  std::vector<double> sb_deltas;
  int sb_trials = 3, sb_n = 64;
  double sb_T = 10.0, sb_dt = 5e-4, sb_L = 30.0, sb_window = 0.5;
  c_sb->add_option("--gs", sb_gs, "ground-state snapshot path")->required();
  c_sb->add_option("--delta", sb_deltas, "perturbation sizes, decreasing")
      ->required();
  c_sb->add_option("--trials", sb_trials, "seeds per delta")->capture_default_str();
  c_sb->add_option("--T-sim", sb_T, "simulated time")->capture_default_str();
  c_sb->add_option("--dt", sb_dt, "time step")->capture_default_str();
  c_sb->add_option("--kind", sb_kind,
                   "perturbation kind: random-h1 | dilation | phase-ramp | "
                   "translate-bump")
      ->capture_default_str();
  c_sb->add_option("--L", sb_L, "box edge")->capture_default_str();
  c_sb->add_option("--n", sb_n, "box nodes per axis")->capture_default_str();
  c_sb->add_option("--window", sb_window, "window length")->capture_default_str();

  CLI11_PARSE(app, argc, argv);
  cfg.out_dir = resolve_out_dir(out_flag);

  try {
    if (c_const->parsed()) cmd_constants(cfg);
    if (c_land->parsed()) cmd_landscape(cfg, land_c);
    if (c_gs->parsed()) cmd_ground_state(cfg, gs_c, gs_opts);
    if (c_ev->parsed())
      cmd_evolve(cfg, ev_datum, ev_T, ev_dt, ev_stride, ev_ceiling, ev_snap_every);
    if (c_st->parsed())
      cmd_strichartz(cfg, st_datum, st_T, st_nodes, st_a, st_amp, st_L, st_n);
    if (c_sb->parsed())
      cmd_stability(cfg, sb_gs, sb_deltas, sb_trials, sb_T, sb_dt, sb_kind, sb_L,
                    sb_n, sb_window);
  } catch (const nlslab::validation_error& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const nlslab::io_error& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitIo;
  } catch (const nlslab::numerical_error& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return 0;
}
