#pragma once

#include <optional>
#include <utility>

#include "nlslab/constants.hpp"
#include "nlslab/model.hpp"

namespace nlslab {

// Scaling exponents of the constrained-energy lower bound:
//   alpha0 = N(q-2)/2 - 2   in (-2, 0)
//   alpha1 = (2N - q(N-2))/2 in [4/N, 2)
//   alpha2 = 4/(N-2)         in (0, 4]
struct Exponents {
  double alpha0 = 0.0;
  double alpha1 = 0.0;
  double alpha2 = 0.0;
};

// All scalar data of the energy landscape:
//   f(c, rho) = 1/2 - (mu/q) C^q rho^{alpha0/2} c^{alpha1/2}
//             - (1/2*) S^{-2*/2} rho^{alpha2/2}
//   max_rho f(c, .) = 1/2 - K c^{2/N}; c0 = (1/(2K))^{N/2}; rho0 = rho_{c0};
//   beta0 = f-gap coefficient at (c0, rho0).
struct LandscapeConstants {
  GNConstant gn;
  SobolevConstant sobolev;
  Exponents exps;
  double K = 0.0;
  double c0 = 0.0;
  double rho0 = 0.0;
  double beta0 = 0.0;
};

Exponents exponents(const ModelParams& params);

// Computes (or loads from cache) the sharp constants and assembles every
// derived landscape scalar.
LandscapeConstants landscape_constants(
    const ModelParams& params,
    const std::optional<std::filesystem::path>& cache_file = {});

// The two-variable bound function f above; requires c > 0, rho > 0.
double landscape_f(const ModelParams& params, const LandscapeConstants& lc,
                   double c, double rho);

// Closed-form argmax rho_c of rho -> f(c, rho).
double rho_max(const ModelParams& params, const LandscapeConstants& lc, double c);

// (K, c0): the maximum value identity max_rho f(c, .) = 1/2 - K c^{2/N}
// and the threshold mass where that maximum crosses zero.
std::pair<double, double> threshold_mass(const ModelParams& params,
                                         const LandscapeConstants& lc);

// Nonnegativity transport: from f(c1, rho1) >= 0 and 0 < c2 <= c1, the
// interval [ (c2/c1) rho1, rho1 ] carries f(c2, .) >= 0.
std::pair<double, double> monotone_extension(const ModelParams& params,
                                             const LandscapeConstants& lc,
                                             double c1, double rho1, double c2);

// Gap coefficient 1/2 - (1/2*) S^{-2*/2} rho0^{alpha2/2}; equals
// (mu/q) C^q rho0^{alpha0/2} c0^{alpha1/2} because f(c0, rho0) = 0.
double beta0(const ModelParams& params, const LandscapeConstants& lc);

}  // namespace nlslab
