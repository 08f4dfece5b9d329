#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nlslab/dynamics.hpp"
#include "nlslab/field.hpp"
#include "nlslab/ground_state.hpp"
#include "nlslab/landscape.hpp"
#include "nlslab/model.hpp"

namespace nlslab {

enum class PerturbationKind {
  random_h1,    // band-limited noise, one draw per seed
  dilation,     // dilate(ref, s near 1) - ref direction
  phase_ramp,   // lowest-frequency phase modulation
  translate_bump  // shifted profile plus an off-center Gaussian bump
};

struct PerturbationSpec {
  PerturbationKind kind = PerturbationKind::random_h1;
  double delta = 0.0;    // H1 size of the perturbation; 0 = control run
  std::uint64_t seed = 1;
};

PerturbationKind perturbation_kind_from_string(const std::string& name);
std::string to_string(PerturbationKind kind);

// Unit-H1-norm perturbation direction on the reference's box grid.
FieldState build_perturbation(const PerturbationSpec& spec,
                              const FieldState& reference);

struct StabilityReport {
  double delta = 0.0;
  std::uint64_t seed = 0;
  std::string kind;
  double T_sim = 0.0;
  double dt = 0.0;
  double initial_distance = 0.0;
  double sup_distance = 0.0;
  double mass_drift = 0.0;    // relative to the initial mass
  double energy_drift = 0.0;  // relative to max(1, |initial energy|)
  double sup_grad = 0.0;
  bool start_checks_ok = false;  // mass < c0 and energy < 0 at t = 0
  bool grad_cap_violated = false;
  bool blowup = false;
  int windows_completed = 0;
  int windows_requested = 0;
  // The distance is measured to the single computed minimizer's orbit, not to
  // the full (unknown) set of minimizers.
  std::string caveat;
};

struct ExperimentOptions {
  BoxGrid box{3, 30.0, 64};
  double window = 0.5;
  int sample_stride = 50;
  double cap_slack = 1e-4;       // violation means grad >= rho0 * (1 + slack)
  double blowup_gradient = 1e8;
  SolverOptions polish;          // box polish settings for radial inputs
};

// Reference orbit representative on the box: a radial minimizer is embedded
// by min-image interpolation and re-polished on the box grid so it is a
// stationary state of the discrete flow; a box minimizer is used directly.
FieldState prepare_box_reference(const GroundStateResult& gs,
                                 const ModelParams& params,
                                 const LandscapeConstants& constants,
                                 const ExperimentOptions& opts);

// One perturb-and-evolve experiment against a prepared reference.
StabilityReport run_stability_experiment_on(const FieldState& reference,
                                            const PerturbationSpec& spec,
                                            const ModelParams& params,
                                            const LandscapeConstants& constants,
                                            double T_sim, double dt,
                                            const ExperimentOptions& opts);

// Convenience wrapper that prepares the reference from a ground-state result.
StabilityReport run_stability_experiment(const GroundStateResult& gs,
                                         const PerturbationSpec& spec,
                                         const ModelParams& params,
                                         const LandscapeConstants& constants,
                                         double T_sim, double dt,
                                         const ExperimentOptions& opts = {});

struct SweepResult {
  std::vector<StabilityReport> runs;  // ordered by (delta desc, seed asc)
  std::vector<std::pair<double, double>> worst;  // delta -> worst sup distance
};

SweepResult sweep_delta(const GroundStateResult& gs,
                        const std::vector<double>& deltas,
                        const ModelParams& params,
                        const LandscapeConstants& constants, double T_sim,
                        double dt, int trials,
                        const ExperimentOptions& opts = {},
                        PerturbationKind kind = PerturbationKind::random_h1);

struct WindowRecord {
  int index = 0;
  double x_norm = 0.0;  // X norm of the free evolution over the window
  bool pass = false;
};

struct ProbeReport {
  std::vector<WindowRecord> windows;
  bool continuation = false;  // every requested window passed
  double gamma0 = 0.0;
};

struct ProbeOptions {
  double gamma0 = 4.0;        // smallness level the window norm must beat
  double max_distance = 1.0;  // orbit-distance gate on the input state
  double dt = 5e-4;           // integrator step between windows
  int time_nodes = 32;        // quadrature nodes for the window norm
};

// Repeated local-window continuation probe: before each window, the free
// evolution's X norm over the window must stay below gamma0; the state is
// then advanced by the full flow and the next window examined.
ProbeReport local_window_probe(const FieldState& phi, const FieldState& reference,
                               const ModelParams& params,
                               const LandscapeConstants& constants, double T0,
                               int windows, const ProbeOptions& opts = {});

}  // namespace nlslab
