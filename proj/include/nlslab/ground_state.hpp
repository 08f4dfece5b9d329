#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "nlslab/field.hpp"
#include "nlslab/landscape.hpp"
#include "nlslab/model.hpp"

namespace nlslab {

struct SolverOptions {
  double tau0 = 0.5;           // initial trial step
  double backtrack = 0.5;      // step shrink factor on rejection
  // Certificate tolerance: convergence requires the Euler-Lagrange residual
  // below tol*sqrt(mass) and, on radial grids, the Pohozaev residual below
  // both tol*(1 + grad) and 1e-6*grad. Periodic-box discretizations are not
  // dilation-invariant, so there the Pohozaev residual is reported, not gated.
  double tol = 1e-6;
  int max_iters = 3000;        // descent-phase iteration budget
  int max_polish_iters = 2000; // residual-phase iteration budget
  double s_init = 0.0;         // Gaussian dilation scale; <= 0 selects automatically
  double rmax = 40.0;          // radial grid extent
  int n = 16384;               // radial grid intervals
  // Called after every accepted step with (iteration, energy, residual norm).
  std::function<void(int, double, double)> observer;
};

struct GroundStateResult {
  FieldState field;
  double m_c = 0.0;               // constrained energy at the final iterate
  double lambda = 0.0;            // Lagrange multiplier estimate
  double pohozaev_residual = 0.0;
  double residual = 0.0;          // projected-gradient L2 norm
  bool grad_cap_ok = false;       // final kinetic term strictly below rho0
  int iterations = 0;
  // converged certifies the whole contract: residual bound at the options'
  // tolerance (plus the Pohozaev bound on radial grids), kinetic term
  // strictly below rho0, negative energy, negative multiplier. Anything less
  // reports false + diagnostics.
  bool converged = false;
  std::string diagnostics;        // non-empty when converged = false
};

// Descent from an arbitrary seed on the seed's own grid (radial or box).
// Mass-projected preconditioned gradient descent with Armijo backtracking,
// followed by a residual-contraction polish phase near the floor; trial
// steps whose kinetic term reaches rho0 are rejected.
GroundStateResult minimize_from(const FieldState& seed, const ModelParams& params,
                                const LandscapeConstants& constants, double c,
                                const SolverOptions& opts);

// Local minimization over the gradient ball on a radial grid, started from a
// dilated Gaussian whose scale keeps the initial energy negative.
GroundStateResult minimize_local(const ModelParams& params,
                                 const LandscapeConstants& constants, double c,
                                 const SolverOptions& opts);

struct MCurvePoint {
  double c = 0.0;
  double m = 0.0;
  double residual = 0.0;
  bool converged = false;
};

// Minimal energy along a grid of masses, warm-starting each point from the
// previous minimizer rescaled to the new mass.
std::vector<MCurvePoint> m_curve(const ModelParams& params,
                                 const LandscapeConstants& constants,
                                 const std::vector<double>& c_grid,
                                 const SolverOptions& opts);

struct SubadditivityReport {
  double m_alpha = 0.0;
  double m_rest = 0.0;
  double m_total = 0.0;
  double gap = 0.0;   // m_alpha + m_rest - m_total
  bool holds = false; // within tolerance
  bool strict = false;
};

SubadditivityReport check_subadditivity(const MCurvePoint& alpha_point,
                                        const MCurvePoint& rest_point,
                                        const MCurvePoint& total_point,
                                        double tol);

}  // namespace nlslab
