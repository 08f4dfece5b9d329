#include "nlslab/stability.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "nlslab/errors.hpp"
#include "nlslab/fft3.hpp"

namespace nlslab {

namespace {

const char* kOrbitCaveat =
    "distance measured to the single computed minimizer's orbit; the full "
    "minimizer set is not known numerically";

// Deterministic standard normals: Box-Muller over mt19937_64 uniforms, so the
// draw is identical across standard libraries for a fixed seed.
class NormalDraw {
 public:
  explicit NormalDraw(std::uint64_t seed) : rng_(seed) {}

  double operator()() {
    if (have_) {
      have_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform();
    } while (u1 <= 1e-300);
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * M_PI * u2;
    spare_ = radius * std::sin(angle);
    have_ = true;
    return radius * std::cos(angle);
  }

 private:
  double uniform() {
    return (rng_() >> 11) * 0x1.0p-53;  // 53-bit mantissa in [0, 1)
  }
  std::mt19937_64 rng_;
  bool have_ = false;
  double spare_ = 0.0;
};

FieldState random_band_limited(const BoxGrid& grid, std::uint64_t seed) {
  constexpr int kBand = 8;  // modes per axis kept on each side of zero
  NormalDraw draw(seed);
  FieldState w = zero_field(Grid{grid});
  std::vector<std::size_t> stride(grid.N);
  {
    std::size_t s = 1;
    for (int d = grid.N - 1; d >= 0; --d) {
      stride[d] = s;
      s *= static_cast<std::size_t>(grid.n);
    }
  }
  // Fill the low-frequency block in spectral space in a fixed mode order.
  auto spectral_index = [&](int m, int axis) {
    const int wrapped = m >= 0 ? m : grid.n + m;
    return static_cast<std::size_t>(wrapped) * stride[axis];
  };
  if (grid.N != 3)
    throw validation_error("random perturbation: implemented for N = 3");
  for (int m0 = -kBand; m0 <= kBand; ++m0)
    for (int m1 = -kBand; m1 <= kBand; ++m1)
      for (int m2 = -kBand; m2 <= kBand; ++m2) {
        const complexd coef(draw(), draw());
        w.values[spectral_index(m0, 0) + spectral_index(m1, 1) +
                 spectral_index(m2, 2)] = coef;
      }
  fft_backward(grid, w.values);
  return w;
}

FieldState normalized_direction(FieldState w) {
  const double norm = h1_norm(w);
  if (!(norm > 0.0))
    throw numerical_error("perturbation direction has zero norm");
  for (complexd& z : w.values) z /= norm;
  return w;
}

}  // namespace

PerturbationKind perturbation_kind_from_string(const std::string& name) {
  if (name == "random-h1" || name == "random") return PerturbationKind::random_h1;
  if (name == "dilation") return PerturbationKind::dilation;
  if (name == "phase-ramp") return PerturbationKind::phase_ramp;
  if (name == "translate-bump") return PerturbationKind::translate_bump;
  throw validation_error("unknown perturbation kind: " + name);
}

std::string to_string(PerturbationKind kind) {
  switch (kind) {
    case PerturbationKind::random_h1: return "random-h1";
    case PerturbationKind::dilation: return "dilation";
    case PerturbationKind::phase_ramp: return "phase-ramp";
    case PerturbationKind::translate_bump: return "translate-bump";
  }
  return "unknown";
}

FieldState build_perturbation(const PerturbationSpec& spec,
                              const FieldState& reference) {
  const auto* bg = std::get_if<BoxGrid>(&reference.grid);
  if (!bg) throw validation_error("build_perturbation: box reference required");
  switch (spec.kind) {
    case PerturbationKind::random_h1:
      return normalized_direction(random_band_limited(*bg, spec.seed));
    case PerturbationKind::dilation: {
      FieldState w = dilate(reference, 1.01);
      for (std::size_t i = 0; i < w.values.size(); ++i)
        w.values[i] -= reference.values[i];
      return normalized_direction(std::move(w));
    }
    case PerturbationKind::phase_ramp: {
      FieldState w = reference;
      const double k = 2.0 * M_PI / bg->L;
      std::size_t pos = 0;
      for (int i0 = 0; i0 < bg->n; ++i0) {
        const double x0 = -bg->L / 2 + bg->h() * i0;
        const complexd phase = std::polar(1.0, k * x0);
        const std::size_t block =
            static_cast<std::size_t>(bg->n) * static_cast<std::size_t>(bg->n);
        for (std::size_t j = 0; j < block; ++j, ++pos)
          w.values[pos] = phase * reference.values[pos] - reference.values[pos];
      }
      return normalized_direction(std::move(w));
    }
    case PerturbationKind::translate_bump: {
      FieldState w = translate(reference, {bg->h(), 0.0, 0.0});
      double peak = 0.0;
      for (const complexd& z : reference.values)
        peak = std::max(peak, std::abs(z));
      std::size_t pos = 0;
      for (int i0 = 0; i0 < bg->n; ++i0) {
        const double x0 = -bg->L / 2 + bg->h() * i0 - bg->L / 8;
        for (int i1 = 0; i1 < bg->n; ++i1) {
          const double x1 = -bg->L / 2 + bg->h() * i1;
          const double partial = x0 * x0 + x1 * x1;
          for (int i2 = 0; i2 < bg->n; ++i2, ++pos) {
            const double x2 = -bg->L / 2 + bg->h() * i2;
            const double r2 = partial + x2 * x2;
            w.values[pos] += 0.05 * peak * std::exp(-r2) - reference.values[pos];
          }
        }
      }
      return normalized_direction(std::move(w));
    }
  }
  throw validation_error("build_perturbation: unhandled kind");
}

FieldState prepare_box_reference(const GroundStateResult& gs,
                                 const ModelParams& params,
                                 const LandscapeConstants& constants,
                                 const ExperimentOptions& opts) {
  if (!gs.converged)
    throw validation_error("stability: the ground-state input did not converge");
  const double c = mass_of(gs.field);
  if (std::holds_alternative<BoxGrid>(gs.field.grid)) return gs.field;
  FieldState seed = embed_radial_to_box(gs.field, opts.box);
  GroundStateResult polished =
      minimize_from(seed, params, constants, c, opts.polish);
  if (!polished.converged)
    throw numerical_error("stability: box polish did not converge: " +
                          polished.diagnostics);
  return polished.field;
}

StabilityReport run_stability_experiment_on(const FieldState& reference,
                                            const PerturbationSpec& spec,
                                            const ModelParams& params,
                                            const LandscapeConstants& constants,
                                            double T_sim, double dt,
                                            const ExperimentOptions& opts) {
  if (!(T_sim > 0.0) || !(dt > 0.0) || !(opts.window > 0.0))
    throw validation_error("stability: T_sim, dt and window must be positive");
  if (spec.delta < 0.0)
    throw validation_error("stability: delta must be nonnegative");

  FieldState phi = reference;
  if (spec.delta > 0.0) {
    const FieldState w = build_perturbation(spec, reference);
    for (std::size_t i = 0; i < phi.values.size(); ++i)
      phi.values[i] += spec.delta * w.values[i];
  }

  StabilityReport rep;
  rep.delta = spec.delta;
  rep.seed = spec.seed;
  rep.kind = to_string(spec.kind);
  rep.T_sim = T_sim;
  rep.dt = dt;
  rep.caveat = kOrbitCaveat;
  rep.initial_distance = orbit_distance(phi, reference);

  const FunctionalReport start = functionals(phi, params);
  rep.start_checks_ok = start.mass < constants.c0 && start.energy < 0.0;

  const int windows = static_cast<int>(std::ceil(T_sim / opts.window - 1e-12));
  rep.windows_requested = windows;
  const double cap_level = constants.rho0 * (1.0 + opts.cap_slack);

  EvolveOptions evolve_opts;
  evolve_opts.sample_stride = opts.sample_stride;
  evolve_opts.blowup_gradient = opts.blowup_gradient;
  evolve_opts.cap_rho = cap_level;

  FieldState state = phi;
  double mass0 = 0.0, energy0 = 0.0;
  bool first = true;
  for (int win = 0; win < windows; ++win) {
    const double span = std::min(opts.window, T_sim - win * opts.window);
    EvolveResult res =
        evolve_splitstep(state, params, span, dt, evolve_opts, &reference);
    const EvolutionTrace& tr = res.trace;
    for (std::size_t i = 0; i < tr.times.size(); ++i) {
      if (first) {
        mass0 = tr.mass[i];
        energy0 = tr.energy[i];
        first = false;
      }
      rep.sup_distance = std::max(rep.sup_distance, tr.orbit_dist[i]);
      rep.sup_grad = std::max(rep.sup_grad, tr.grad[i]);
      rep.mass_drift = std::max(rep.mass_drift,
                                std::abs(tr.mass[i] - mass0) / mass0);
      rep.energy_drift =
          std::max(rep.energy_drift, std::abs(tr.energy[i] - energy0) /
                                         std::max(1.0, std::abs(energy0)));
      if (tr.cap_flag[i]) rep.grad_cap_violated = true;
    }
    if (tr.blowup) {
      rep.blowup = true;
      return rep;
    }
    if (rep.grad_cap_violated) return rep;
    state = std::move(res.final_state);
    rep.windows_completed = win + 1;
  }
  return rep;
}

StabilityReport run_stability_experiment(const GroundStateResult& gs,
                                         const PerturbationSpec& spec,
                                         const ModelParams& params,
                                         const LandscapeConstants& constants,
                                         double T_sim, double dt,
                                         const ExperimentOptions& opts) {
  const FieldState reference = prepare_box_reference(gs, params, constants, opts);
  return run_stability_experiment_on(reference, spec, params, constants, T_sim,
                                     dt, opts);
}

SweepResult sweep_delta(const GroundStateResult& gs,
                        const std::vector<double>& deltas,
                        const ModelParams& params,
                        const LandscapeConstants& constants, double T_sim,
                        double dt, int trials, const ExperimentOptions& opts,
                        PerturbationKind kind) {
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    if (!(deltas[i] > 0.0))
      throw validation_error("sweep_delta: deltas must be positive");
    if (i > 0 && !(deltas[i] < deltas[i - 1]))
      throw validation_error("sweep_delta: deltas must be strictly decreasing");
  }
  if (trials < 1) throw validation_error("sweep_delta: trials must be >= 1");
  SweepResult out;
  if (deltas.empty()) return out;
  const FieldState reference = prepare_box_reference(gs, params, constants, opts);
  for (double delta : deltas) {
    double worst = 0.0;
    for (int trial = 0; trial < trials; ++trial) {
      PerturbationSpec spec;
      spec.kind = kind;
      spec.delta = delta;
      spec.seed = 1000 + static_cast<std::uint64_t>(trial);
      StabilityReport rep = run_stability_experiment_on(
          reference, spec, params, constants, T_sim, dt, opts);
      worst = std::max(worst, rep.sup_distance);
      out.runs.push_back(std::move(rep));
    }
    out.worst.emplace_back(delta, worst);
  }
  return out;
}

ProbeReport local_window_probe(const FieldState& phi, const FieldState& reference,
                               const ModelParams& params,
                               const LandscapeConstants& constants, double T0,
                               int windows, const ProbeOptions& opts) {
  if (!(T0 > 0.0)) throw validation_error("local_window_probe: T0 > 0 required");
  if (windows < 0)
    throw validation_error("local_window_probe: windows must be nonnegative");
  const double dist = orbit_distance(phi, reference);
  if (dist > opts.max_distance)
    throw validation_error(
        "local_window_probe: state is outside the configured orbit "
        "neighborhood (distance " + std::to_string(dist) + ")");
  ProbeReport rep;
  rep.gamma0 = opts.gamma0;
  rep.continuation = true;
  FieldState state = phi;
  EvolveOptions evolve_opts;
  evolve_opts.sample_stride = 1 << 20;  // endpoints only
  evolve_opts.cap_rho = constants.rho0;
  for (int w = 0; w < windows; ++w) {
    WindowRecord rec;
    rec.index = w;
    const StrichartzReport sr = strichartz_report(state, params, T0, opts.time_nodes);
    rec.x_norm = sr.X;
    rec.pass = sr.X < opts.gamma0;
    rep.windows.push_back(rec);
    if (!rec.pass) {
      rep.continuation = false;
      break;
    }
    EvolveResult res = evolve_splitstep(state, params, T0, opts.dt, evolve_opts);
    if (res.trace.blowup) {
      rep.continuation = false;
      break;
    }
    state = std::move(res.final_state);
  }
  if (static_cast<int>(rep.windows.size()) < windows) rep.continuation = false;
  return rep;
}

}  // namespace nlslab
