#include "nlslab/dynamics.hpp"

#include <algorithm>
#include <cmath>

#include "nlslab/errors.hpp"
#include "nlslab/fft3.hpp"

namespace nlslab {

namespace {

const BoxGrid& require_box(const FieldState& u, const char* who) {
  const auto* bg = std::get_if<BoxGrid>(&u.grid);
  if (!bg)
    throw validation_error(std::string(who) +
                           ": box grid required (radial fields have no "
                           "periodic spectral propagator)");
  if (u.values.size() != bg->total())
    throw validation_error(std::string(who) + ": field size mismatch");
  return *bg;
}

std::vector<double> k2_flat(const BoxGrid& grid) {
  std::vector<double> axis(grid.n);
  for (int i = 0; i < grid.n; ++i) {
    const double k = grid.wavenumber(i);
    axis[i] = k * k;
  }
  std::vector<double> out(grid.total());
  std::size_t pos = 0;
  if (grid.N == 1) {
    out = axis;
  } else if (grid.N == 2) {
    for (int i0 = 0; i0 < grid.n; ++i0)
      for (int i1 = 0; i1 < grid.n; ++i1) out[pos++] = axis[i0] + axis[i1];
  } else {
    for (int i0 = 0; i0 < grid.n; ++i0)
      for (int i1 = 0; i1 < grid.n; ++i1) {
        const double partial = axis[i0] + axis[i1];
        for (int i2 = 0; i2 < grid.n; ++i2) out[pos++] = partial + axis[i2];
      }
  }
  return out;
}

double cell_volume(const BoxGrid& grid) {
  double cell = 1.0;
  for (int d = 0; d < grid.N; ++d) cell *= grid.h();
  return cell;
}

// In-place spectral multiplication by e^{-i t |k|^2}.
void apply_free_multiplier(const BoxGrid& grid, const std::vector<double>& k2,
                           double t, std::vector<complexd>& v) {
  fft_forward(grid, v);
  const double scale = 1.0 / static_cast<double>(grid.total());
  for (std::size_t i = 0; i < v.size(); ++i)
    v[i] *= std::polar(scale, -t * k2[i]);
  fft_backward(grid, v);
}

void apply_nonlinear_phase(const ModelParams& params, double t,
                           std::vector<complexd>& v) {
  const double two_star = params.two_star();
  for (complexd& z : v) {
    const double a = std::abs(z);
    if (a == 0.0) continue;
    const double phase =
        t * (params.mu * std::pow(a, params.q - 2.0) + std::pow(a, two_star - 2.0));
    z *= std::polar(1.0, phase);
  }
}

}  // namespace

PairWithSigma admissible_pair(int N, double alpha) {
  if (N < 3) throw validation_error("admissible_pair: N must be at least 3");
  const double two_star = 2.0 * N / (N - 2.0);
  if (!(alpha > 2.0) || !(alpha <= two_star))
    throw validation_error("admissible_pair: alpha must lie in (2, 2N/(N-2)]");
  PairWithSigma out;
  out.pair.p = 4.0 * alpha / ((alpha - 2.0) * (N - 2.0));
  out.pair.r = N * alpha / (alpha + N - 2.0);
  out.sigma = (N - 2.0) * (two_star - alpha) / 4.0;
  return out;
}

FieldState free_propagate(const FieldState& phi, double t) {
  const BoxGrid& grid = require_box(phi, "free_propagate");
  FieldState out = phi;
  apply_free_multiplier(grid, k2_flat(grid), t, out.values);
  return out;
}

namespace {

// L^r norm and W^{1,r} norm (spectral gradient magnitude) of one field.
PairNorms spatial_norms(const BoxGrid& grid, const std::vector<complexd>& v,
                        double r) {
  const double cell = cell_volume(grid);
  double sum = 0.0;
  for (const complexd& z : v) sum += std::pow(std::abs(z), r);
  const double lr = std::pow(cell * sum, 1.0 / r);
  // Gradient magnitude via per-axis spectral derivatives.
  std::vector<double> gmag2(v.size(), 0.0);
  std::vector<complexd> hat = v;
  fft_forward(grid, hat);
  const double scale = 1.0 / static_cast<double>(grid.total());
  std::vector<complexd> work(v.size());
  std::vector<std::size_t> stride(grid.N);
  {
    std::size_t s = 1;
    for (int d = grid.N - 1; d >= 0; --d) {
      stride[d] = s;
      s *= static_cast<std::size_t>(grid.n);
    }
  }
  for (int d = 0; d < grid.N; ++d) {
    for (std::size_t flat = 0; flat < hat.size(); ++flat) {
      const int id = static_cast<int>((flat / stride[d]) %
                                      static_cast<std::size_t>(grid.n));
      work[flat] = hat[flat] * complexd(0.0, grid.wavenumber(id) * scale);
    }
    fft_backward(grid, work);
    for (std::size_t i = 0; i < work.size(); ++i)
      gmag2[i] += std::norm(work[i]);
  }
  double gsum = 0.0;
  for (double g2 : gmag2) gsum += std::pow(g2, 0.5 * r);
  const double glr = std::pow(cell * gsum, 1.0 / r);
  return {lr, lr + glr};
}

}  // namespace

PairNorms strichartz_norm(const FieldState& phi, const AdmissiblePair& pair,
                          double T, int time_nodes) {
  const BoxGrid& grid = require_box(phi, "strichartz_norm");
  if (!(T > 0.0)) throw validation_error("strichartz_norm: T must be positive");
  if (time_nodes < 2)
    throw validation_error("strichartz_norm: at least two time nodes");
  const std::vector<double> k2 = k2_flat(grid);
  const double dt = T / time_nodes;
  double accY = 0.0, accX = 0.0;
  std::vector<complexd> v = phi.values;
  for (int j = 0; j <= time_nodes; ++j) {
    if (j > 0) apply_free_multiplier(grid, k2, dt, v);
    const PairNorms s = spatial_norms(grid, v, pair.r);
    const double wt = (j == 0 || j == time_nodes) ? 0.5 : 1.0;
    accY += wt * std::pow(s.Y, pair.p);
    accX += wt * std::pow(s.X, pair.p);
  }
  return {std::pow(dt * accY, 1.0 / pair.p), std::pow(dt * accX, 1.0 / pair.p)};
}

StrichartzReport strichartz_report(const FieldState& phi,
                                   const ModelParams& params, double T,
                                   int time_nodes) {
  validate(params);
  const PairWithSigma a = admissible_pair(params.N, params.q);
  const PairWithSigma b = admissible_pair(params.N, params.two_star());
  const PairNorms na = strichartz_norm(phi, a.pair, T, time_nodes);
  const PairNorms nb = strichartz_norm(phi, b.pair, T, time_nodes);
  StrichartzReport rep;
  rep.pair1 = a.pair;
  rep.pair2 = b.pair;
  rep.sigma1 = a.sigma;
  rep.sigma2 = b.sigma;
  rep.Y1 = na.Y;
  rep.X1 = na.X;
  rep.Y2 = nb.Y;
  rep.X2 = nb.X;
  rep.Y = na.Y + nb.Y;
  rep.X = na.X + nb.X;
  return rep;
}

EvolveResult evolve_splitstep(const FieldState& phi, const ModelParams& params,
                              double T, double dt, const EvolveOptions& opts,
                              const FieldState* orbit_reference) {
  const BoxGrid& grid = require_box(phi, "evolve_splitstep");
  validate(params);
  if (!(T > 0.0) || !(dt > 0.0))
    throw validation_error("evolve_splitstep: T and dt must be positive");
  if (orbit_reference && !same_grid(orbit_reference->grid, phi.grid))
    throw validation_error("evolve_splitstep: reference grid mismatch");
  const std::vector<double> k2 = k2_flat(grid);
  const long steps = std::lround(T / dt);
  if (steps < 1)
    throw validation_error("evolve_splitstep: T shorter than one step");

  EvolveResult out;
  out.final_state = phi;
  EvolutionTrace& tr = out.trace;
  tr.dt = dt;
  const bool track_cap = !std::isnan(opts.cap_rho);

  auto sample = [&](double t) {
    const FunctionalReport rep = functionals(out.final_state, params);
    tr.times.push_back(t);
    tr.mass.push_back(rep.mass);
    tr.energy.push_back(rep.energy);
    tr.grad.push_back(rep.grad);
    tr.cap_flag.push_back(track_cap && rep.grad >= opts.cap_rho ? 1 : 0);
    if (orbit_reference)
      tr.orbit_dist.push_back(orbit_distance(out.final_state, *orbit_reference));
    if (!std::isfinite(rep.mass) || !std::isfinite(rep.grad) ||
        rep.grad > opts.blowup_gradient) {
      tr.blowup = true;
      tr.note = "halted at t = " + std::to_string(t) +
                (std::isfinite(rep.grad)
                     ? ": squared gradient " + std::to_string(rep.grad) +
                           " exceeded the ceiling"
                     : ": field is no longer finite");
    }
    return !tr.blowup;
  };

  if (!sample(0.0)) return out;
  std::vector<complexd>& v = out.final_state.values;
  for (long step = 1; step <= steps; ++step) {
    apply_nonlinear_phase(params, 0.5 * dt, v);
    apply_free_multiplier(grid, k2, dt, v);
    apply_nonlinear_phase(params, 0.5 * dt, v);
    // Cheap per-step health check between samples.
    double peak = 0.0;
    for (const complexd& z : v) peak = std::max(peak, std::norm(z));
    const double t = static_cast<double>(step) * dt;
    if (!std::isfinite(peak)) {
      sample(t);
      return out;
    }
    if (step % opts.sample_stride == 0 || step == steps) {
      if (!sample(t)) return out;
    }
  }
  return out;
}

namespace {

// Full nonlinearity g(u) = mu u|u|^{q-2} + u|u|^{2*-2}.
void nonlinearity(const ModelParams& params, const std::vector<complexd>& v,
                  std::vector<complexd>& out) {
  const double two_star = params.two_star();
  out.resize(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double a = std::abs(v[i]);
    out[i] = a == 0.0 ? complexd(0.0)
                      : (params.mu * std::pow(a, params.q - 2.0) +
                         std::pow(a, two_star - 2.0)) *
                            v[i];
  }
}

// Y_T norm (both designated pairs) of a sampled space-time field via the same
// trapezoid quadrature as strichartz_norm.
double yt_norm(const BoxGrid& grid, const ModelParams& params,
               const std::vector<std::vector<complexd>>& samples, double T) {
  const PairWithSigma pairs[2] = {admissible_pair(params.N, params.q),
                                  admissible_pair(params.N, params.two_star())};
  const double cell = cell_volume(grid);
  const int nt = static_cast<int>(samples.size()) - 1;
  const double dt = T / nt;
  double total = 0.0;
  for (const PairWithSigma& ps : pairs) {
    const double p = ps.pair.p, r = ps.pair.r;
    double acc = 0.0;
    for (int j = 0; j <= nt; ++j) {
      double sum = 0.0;
      for (const complexd& z : samples[j]) sum += std::pow(std::abs(z), r);
      const double lr = std::pow(cell * sum, 1.0 / r);
      acc += ((j == 0 || j == nt) ? 0.5 : 1.0) * std::pow(lr, p);
    }
    total += std::pow(dt * acc, 1.0 / p);
  }
  return total;
}

}  // namespace

PicardReport picard_iterate(const FieldState& phi, const ModelParams& params,
                            double T, int k_max, int time_nodes) {
  const BoxGrid& grid = require_box(phi, "picard_iterate");
  validate(params);
  if (!(T > 0.0)) throw validation_error("picard_iterate: T must be positive");
  if (k_max < 1 || time_nodes < 2)
    throw validation_error("picard_iterate: need k_max >= 1, time_nodes >= 2");
  const std::vector<double> k2 = k2_flat(grid);
  const double dt = T / time_nodes;
  const int nt = time_nodes;

  // Iterate u^{(0)}: the free evolution sampled on the time grid.
  std::vector<std::vector<complexd>> cur(nt + 1);
  cur[0] = phi.values;
  for (int j = 1; j <= nt; ++j) {
    cur[j] = cur[j - 1];
    apply_free_multiplier(grid, k2, dt, cur[j]);
  }
  const std::vector<std::vector<complexd>> free_part = cur;

  PicardReport rep;
  rep.at_T.push_back(FieldState{phi.grid, cur[nt]});
  std::vector<std::vector<complexd>> next(nt + 1);
  std::vector<complexd> duhamel(phi.values.size());
  std::vector<complexd> g;
  for (int k = 1; k <= k_max; ++k) {
    // next = free_part + i * left-rectangle Duhamel sum over cur.
    std::fill(duhamel.begin(), duhamel.end(), complexd(0.0));
    next[0] = phi.values;
    for (int j = 1; j <= nt; ++j) {
      nonlinearity(params, cur[j - 1], g);
      for (std::size_t i = 0; i < duhamel.size(); ++i)
        duhamel[i] += dt * g[i];
      apply_free_multiplier(grid, k2, dt, duhamel);
      next[j] = free_part[j];
      for (std::size_t i = 0; i < duhamel.size(); ++i)
        next[j][i] += complexd(0.0, 1.0) * duhamel[i];
    }
    // Distance in Y_T between consecutive iterates.
    std::vector<std::vector<complexd>> diff(nt + 1);
    for (int j = 0; j <= nt; ++j) {
      diff[j].resize(next[j].size());
      for (std::size_t i = 0; i < next[j].size(); ++i)
        diff[j][i] = next[j][i] - cur[j][i];
    }
    rep.d.push_back(yt_norm(grid, params, diff, T));
    rep.at_T.push_back(FieldState{phi.grid, next[nt]});
    cur.swap(next);
  }
  int run = 0;
  for (std::size_t k = 1; k < rep.d.size(); ++k) {
    const double ratio = rep.d[k - 1] > 0.0 ? rep.d[k] / rep.d[k - 1] : 0.0;
    rep.ratios.push_back(ratio);
    run = ratio >= 1.0 ? run + 1 : 0;
    if (run >= 3) rep.diverged = true;
  }
  // A non-finite distance means the iteration left the contraction regime
  // and overflowed; that must read as divergence, not as a silent pass.
  for (double dk : rep.d)
    if (!std::isfinite(dk)) rep.diverged = true;
  return rep;
}

}  // namespace nlslab
