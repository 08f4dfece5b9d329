#include "nlslab/ground_state.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <functional>

#include "nlslab/errors.hpp"
#include "nlslab/fft3.hpp"

namespace nlslab {

namespace {

// (shift - Lap_h)^{-1} rhs on the radial finite-volume grid: Thomas solve of
// the tridiagonal system (shift W + L) x = W rhs, L the kinetic-form matrix.
std::vector<complexd> radial_precond(const RadialGrid& grid,
                                     const std::vector<complexd>& rhs,
                                     double shift) {
  const RadialQuadrature quad = radial_quadrature(grid);
  const std::size_t m = rhs.size();
  std::vector<double> fr(grid.n);
  for (int i = 0; i < grid.n; ++i)
    fr[i] = quad.area / quad.h * std::pow(quad.rf[i], grid.N - 1);
  std::vector<double> diag(m), off(grid.n);
  for (int i = 0; i < grid.n; ++i) off[i] = -fr[i];
  for (std::size_t i = 0; i < m; ++i) {
    double d = shift * quad.w[i];
    if (i > 0) d += fr[i - 1];
    if (i < static_cast<std::size_t>(grid.n)) d += fr[i];
    diag[i] = d;
  }
  std::vector<complexd> x(m), b(m);
  for (std::size_t i = 0; i < m; ++i) b[i] = quad.w[i] * rhs[i];
  std::vector<double> cp(m, 0.0);
  cp[0] = off[0] / diag[0];
  b[0] /= diag[0];
  for (std::size_t i = 1; i < m; ++i) {
    const double denom = diag[i] - off[i - 1] * cp[i - 1];
    if (i < m - 1) cp[i] = off[i] / denom;
    b[i] = (b[i] - off[i - 1] * b[i - 1]) / denom;
  }
  x[m - 1] = b[m - 1];
  for (std::size_t i = m - 1; i-- > 0;) x[i] = b[i] - cp[i] * x[i + 1];
  return x;
}

// (shift - Lap)^{-1} rhs on the box via the Fourier multiplier.
std::vector<complexd> box_precond(const BoxGrid& grid,
                                  const std::vector<complexd>& rhs,
                                  double shift) {
  std::vector<complexd> hat = rhs;
  fft_forward(grid, hat);
  std::vector<double> axis(grid.n);
  for (int i = 0; i < grid.n; ++i) {
    const double k = grid.wavenumber(i);
    axis[i] = k * k;
  }
  const double scale = 1.0 / static_cast<double>(grid.total());
  std::size_t pos = 0;
  if (grid.N == 3) {
    for (int i0 = 0; i0 < grid.n; ++i0)
      for (int i1 = 0; i1 < grid.n; ++i1) {
        const double partial = axis[i0] + axis[i1];
        for (int i2 = 0; i2 < grid.n; ++i2, ++pos)
          hat[pos] *= scale / (shift + partial + axis[i2]);
      }
  } else {
    for (int i0 = 0; i0 < grid.n; ++i0) {
      if (grid.N == 1) {
        hat[pos] *= scale / (shift + axis[i0]);
        ++pos;
      } else {
        for (int i1 = 0; i1 < grid.n; ++i1, ++pos)
          hat[pos] *= scale / (shift + axis[i0] + axis[i1]);
      }
    }
  }
  fft_backward(grid, hat);
  return hat;
}

// The Hessian of the constrained energy acts like -Lap - lambda plus local
// terms, so shifting by -lambda keeps the low-frequency modes contracting
// even in the weak-coupling (small-mass) regime where |lambda| is small.
FieldState precondition(const Grid& grid, const std::vector<complexd>& rhs,
                        double lambda) {
  const double shift = std::max(1e-2, -lambda);
  if (const auto* rg = std::get_if<RadialGrid>(&grid))
    return FieldState{grid, radial_precond(*rg, rhs, shift)};
  return FieldState{grid, box_precond(std::get<BoxGrid>(grid), rhs, shift)};
}

double residual_norm(const FieldState& res) {
  return std::sqrt(std::max(0.0, l2_inner(res, res)));
}

FieldState projected_gradient(const FieldState& u, const FieldState& grad_f,
                              double lambda) {
  FieldState res = grad_f;
  for (std::size_t i = 0; i < res.values.size(); ++i)
    res.values[i] -= lambda * u.values[i];
  return res;
}

FieldState step_and_project(const FieldState& u, const FieldState& d, double t,
                            double c) {
  FieldState v = u;
  for (std::size_t i = 0; i < v.values.size(); ++i)
    v.values[i] -= t * d.values[i];
  return mass_rescale(v, c);
}

std::string sci(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3e", x);
  return buf;
}

}  // namespace

GroundStateResult minimize_from(const FieldState& seed, const ModelParams& params,
                                const LandscapeConstants& constants, double c,
                                const SolverOptions& opts) {
  if (!(c > 0.0) || !(c < constants.c0))
    throw validation_error("minimize_local: c must lie in (0, c0); c0 = " +
                           std::to_string(constants.c0));
  if (!(opts.tau0 > 0.0) || !(opts.tol > 0.0) || !(opts.backtrack > 0.0) ||
      !(opts.backtrack < 1.0))
    throw validation_error("minimize_local: step, tolerance and backtracking "
                           "factor must be positive (backtracking below 1)");
  const double rho0 = constants.rho0;

  FieldState u = mass_rescale(seed, c);
  FunctionalReport rep = functionals(u, params);
  double tau = opts.tau0;
  int iters = 0;
  constexpr double kTauFloor = 1e-12;
  constexpr double kArmijoSigma = 1e-4;
  constexpr double kTauCap = 1.6;
  constexpr double kTauGrowth = 1.25;
  // Absolute Pohozaev-membership fraction of the kinetic term; part of the
  // convergence certificate alongside the tol-scaled bounds.
  constexpr double kMembership = 1e-6;

  // Dilation is a symmetry of the radial discretization only; on the
  // periodic box (fixed L) the discrete stationary state carries a
  // truncation offset in the Pohozaev residual that no iteration removes,
  // so membership is certified on radial grids and reported otherwise.
  const bool gate_pohozaev = std::holds_alternative<RadialGrid>(u.grid);

  auto pohozaev_cap = [&](const FunctionalReport& r) {
    return std::min(opts.tol * (1.0 + r.grad), kMembership * r.grad);
  };
  // converged certifies the full result contract, not just a small residual:
  // EL residual, Pohozaev membership (radial), strict cap, negative level,
  // negative multiplier.
  auto certified = [&](const FunctionalReport& r, double rn_now) {
    return rn_now <= opts.tol * std::sqrt(r.mass) &&
           (!gate_pohozaev || std::abs(r.pohozaev) <= pohozaev_cap(r)) &&
           r.grad < rho0 && r.energy < 0.0 && r.lambda < 0.0;
  };

  auto finish = [&](double rn, bool converged, const std::string& why) {
    GroundStateResult out;
    out.field = recenter(u);
    rep = functionals(out.field, params);
    out.m_c = rep.energy;
    out.lambda = rep.lambda;
    out.pohozaev_residual = rep.pohozaev;
    out.residual = rn;
    out.grad_cap_ok = rep.grad < rho0;
    out.iterations = iters;
    out.converged = converged;
    if (!converged) out.diagnostics = why;
    return out;
  };

  // Phase 1: Armijo descent on the constrained energy.
  bool stalled = false;
  double rn = 0.0;
  for (; iters < opts.max_iters;) {
    ++iters;
    const FieldState grad_f = variational_gradient(u, params);
    const FieldState res = projected_gradient(u, grad_f, rep.lambda);
    rn = residual_norm(res);
    if (certified(rep, rn)) return finish(rn, true, "");
    // Residual already at target but the certificate is still blocked
    // (Pohozaev, typically): the polish phase owns that.
    if (rn <= opts.tol * std::sqrt(rep.mass)) break;
    const FieldState d = precondition(u.grid, res.values, rep.lambda);
    const double slope = l2_inner(res, d);
    bool accepted = false;
    for (double t = tau; t > kTauFloor; t *= opts.backtrack) {
      FieldState v = step_and_project(u, d, t, c);
      const FunctionalReport r2 = functionals(v, params);
      if (r2.grad < rho0 && r2.energy <= rep.energy - kArmijoSigma * t * slope) {
        u = std::move(v);
        rep = r2;
        tau = std::min(t * kTauGrowth, kTauCap);
        accepted = true;
        if (opts.observer) opts.observer(iters, rep.energy, rn);
        break;
      }
    }
    if (!accepted) {
      stalled = true;
      break;
    }
  }

  // Phase 2: the energy comparison saturates at roundoff near the minimum;
  // switch the merit function to the residual norm, which stays clean.
  {
    auto stall_msg = [&]() {
      return "residual phase stalled: residual " + sci(rn) + " (target " +
             sci(opts.tol * std::sqrt(rep.mass)) + "), |pohozaev| " +
             sci(std::abs(rep.pohozaev)) + " (cap " + sci(pohozaev_cap(rep)) +
             ")";
    };
    const FieldState grad_f = variational_gradient(u, params);
    FieldState res = projected_gradient(u, grad_f, rep.lambda);
    rn = residual_norm(res);
    if (certified(rep, rn)) return finish(rn, true, "");
    tau = 1.0;

    // The preconditioned residual iteration contracts poorly along the
    // nearly-neutral dilation mode, which is exactly the component the
    // Pohozaev residual measures. theta(s) below is P(u_s)/s^2 along the
    // exactly-scaled fiber through u; relocating u to its root near s = 1
    // removes that component in one resampling.
    const double a0 = 0.5 * params.N * (params.q - 2.0) - 2.0;
    const double a2 = 4.0 / (params.N - 2.0);
    const double kq =
        params.mu * params.N * (params.q - 2.0) / (2.0 * params.q);
    auto try_fiber = [&]() -> bool {
      double s = 1.0;
      for (int k = 0; k < 20; ++k) {
        const double th = rep.grad - kq * std::pow(s, a0) * rep.lq -
                          std::pow(s, a2) * rep.lcrit;
        const double dth = -kq * a0 * std::pow(s, a0 - 1.0) * rep.lq -
                           a2 * std::pow(s, a2 - 1.0) * rep.lcrit;
        if (!(std::abs(dth) > 0.0)) return false;
        const double step = th / dth;
        s -= step;
        if (!(s > 0.5) || !(s < 2.0)) return false;
        if (std::abs(step) <= 1e-14 * s) break;
      }
      FieldState cand;
      try {
        cand = mass_rescale(dilate(u, s), c);
      } catch (const numerical_error&) {
        return false;
      }
      const FunctionalReport r2 = functionals(cand, params);
      if (!(r2.grad < rho0)) return false;
      if (!(std::abs(r2.pohozaev) < 0.5 * std::abs(rep.pohozaev)))
        return false;
      const FieldState grad2 = variational_gradient(cand, params);
      FieldState res2 = projected_gradient(cand, grad2, r2.lambda);
      const double rn2 = residual_norm(res2);
      if (!(rn2 <= opts.tol * std::sqrt(r2.mass)) && !(rn2 <= rn))
        return false;
      u = std::move(cand);
      rep = r2;
      res = std::move(res2);
      rn = rn2;
      if (opts.observer) opts.observer(iters, rep.energy, rn);
      return true;
    };

    int fiber_budget = 3;
    // A fiber step perturbs the residual in proportion to |P|, so a failed
    // attempt waits for further contraction before retrying.
    double fiber_retry_rn = std::numeric_limits<double>::infinity();
    for (int it2 = 0; it2 < opts.max_polish_iters; ++it2) {
      ++iters;
      if (gate_pohozaev && rn <= opts.tol * std::sqrt(rep.mass) &&
          rn <= fiber_retry_rn &&
          std::abs(rep.pohozaev) > pohozaev_cap(rep) && fiber_budget > 0) {
        if (try_fiber()) {
          --fiber_budget;
          if (certified(rep, rn)) return finish(rn, true, "");
          continue;
        }
        fiber_retry_rn = 0.25 * rn;
      }
      const FieldState d = precondition(u.grid, res.values, rep.lambda);
      bool accepted = false;
      for (double t = tau; t > kTauFloor; t *= opts.backtrack) {
        FieldState v = step_and_project(u, d, t, c);
        const FunctionalReport r2 = functionals(v, params);
        if (r2.grad >= rho0) continue;
        const FieldState grad2 = variational_gradient(v, params);
        FieldState res2 = projected_gradient(v, grad2, r2.lambda);
        const double rn2 = residual_norm(res2);
        if (rn2 <= rn * (1.0 - 0.1 * std::min(t, 1.0))) {
          u = std::move(v);
          rep = r2;
          res = std::move(res2);
          rn = rn2;
          tau = std::min(t * kTauGrowth, 1.0);
          accepted = true;
          if (opts.observer) opts.observer(iters, rep.energy, rn);
          break;
        }
      }
      if (!accepted) {
        if (gate_pohozaev && fiber_budget > 0 && try_fiber()) {
          --fiber_budget;
          if (certified(rep, rn)) return finish(rn, true, "");
          continue;
        }
        return finish(rn, false, stall_msg());
      }
      if (certified(rep, rn)) return finish(rn, true, "");
    }
  }
  return finish(rn, false,
                stalled ? "iteration budget exhausted after an Armijo stall"
                        : "iteration budget exhausted");
}

namespace {

// Scale for the initial dilated Gaussian: scan for negative energy inside the
// gradient ball; small s always works for subcritical masses.
double auto_scale(const RadialGrid& grid, const ModelParams& params,
                  const LandscapeConstants& constants, double c) {
  double best_s = 0.0;
  double best_f = 0.0;
  for (double s = 0.05; s <= 4.0; s *= 1.2) {
    FieldState g = zero_field(Grid{grid});
    for (std::size_t i = 0; i < g.values.size(); ++i) {
      const double r = s * grid.h() * static_cast<double>(i);
      g.values[i] = std::pow(s, 0.5 * grid.N) * std::exp(-0.5 * r * r);
    }
    g = mass_rescale(g, c);
    const FunctionalReport rep = functionals(g, params);
    if (rep.grad < 0.9 * constants.rho0 && rep.energy < best_f) {
      best_f = rep.energy;
      best_s = s;
    }
  }
  if (best_s == 0.0)
    throw numerical_error(
        "minimize_local: no Gaussian scale with negative energy inside the "
        "gradient ball; mass may be too close to the threshold");
  return best_s;
}

}  // namespace

GroundStateResult minimize_local(const ModelParams& params,
                                 const LandscapeConstants& constants, double c,
                                 const SolverOptions& opts) {
  validate(params);
  RadialGrid grid{params.N, opts.rmax, opts.n};
  validate(Grid{grid});
  const double s =
      opts.s_init > 0.0 ? opts.s_init : auto_scale(grid, params, constants, c);
  FieldState seed = zero_field(Grid{grid});
  for (std::size_t i = 0; i < seed.values.size(); ++i) {
    const double r = s * grid.h() * static_cast<double>(i);
    seed.values[i] = std::pow(s, 0.5 * grid.N) * std::exp(-0.5 * r * r);
  }
  return minimize_from(seed, params, constants, c, opts);
}

std::vector<MCurvePoint> m_curve(const ModelParams& params,
                                 const LandscapeConstants& constants,
                                 const std::vector<double>& c_grid,
                                 const SolverOptions& opts) {
  for (double c : c_grid)
    if (!(c > 0.0) || !(c < constants.c0))
      throw validation_error("m_curve: every c must lie in (0, c0)");
  std::vector<MCurvePoint> out;
  out.reserve(c_grid.size());
  std::optional<FieldState> warm;
  for (double c : c_grid) {
    GroundStateResult res;
    if (warm) {
      res = minimize_from(*warm, params, constants, c, opts);
    } else {
      res = minimize_local(params, constants, c, opts);
    }
    if (res.converged) warm = res.field;
    out.push_back({c, res.m_c, res.residual, res.converged});
  }
  return out;
}

SubadditivityReport check_subadditivity(const MCurvePoint& alpha_point,
                                        const MCurvePoint& rest_point,
                                        const MCurvePoint& total_point,
                                        double tol) {
  if (!alpha_point.converged || !rest_point.converged || !total_point.converged)
    throw validation_error(
        "check_subadditivity: all three minimizations must have converged");
  if (!(alpha_point.c > 0.0) || !(rest_point.c > 0.0) ||
      std::abs(alpha_point.c + rest_point.c - total_point.c) >
          1e-9 * total_point.c)
    throw validation_error(
        "check_subadditivity: masses must split the total mass");
  SubadditivityReport rep;
  rep.m_alpha = alpha_point.m;
  rep.m_rest = rest_point.m;
  rep.m_total = total_point.m;
  rep.gap = alpha_point.m + rest_point.m - total_point.m;
  rep.holds = total_point.m <= alpha_point.m + rest_point.m + tol;
  rep.strict = rep.gap > tol;
  return rep;
}

}  // namespace nlslab
