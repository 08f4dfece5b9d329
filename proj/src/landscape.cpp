#include "nlslab/landscape.hpp"

#include <cmath>

#include "nlslab/errors.hpp"

namespace nlslab {

Exponents exponents(const ModelParams& params) {
  validate(params);
  Exponents e;
  e.alpha0 = params.N * (params.q - 2.0) / 2.0 - 2.0;
  e.alpha1 = (2.0 * params.N - params.q * (params.N - 2.0)) / 2.0;
  e.alpha2 = 4.0 / (params.N - 2.0);
  return e;
}

namespace {

// Coefficients a = (mu/q) C^q and b = (1/2*) S^{-2*/2} of the two power
// terms of f, shared by every landscape formula.
struct FCoeffs {
  double a = 0.0;
  double b = 0.0;
};

FCoeffs f_coeffs(const ModelParams& params, const LandscapeConstants& lc) {
  const double two_star = params.two_star();
  FCoeffs fc;
  fc.a = params.mu / params.q * std::pow(lc.gn.value, params.q);
  fc.b = 1.0 / two_star * std::pow(lc.sobolev.value, -two_star / 2.0);
  return fc;
}

}  // namespace

double landscape_f(const ModelParams& params, const LandscapeConstants& lc,
                   double c, double rho) {
  if (!(c > 0.0)) throw validation_error("landscape_f: c must be positive");
  if (!(rho > 0.0)) throw validation_error("landscape_f: rho must be positive");
  const FCoeffs fc = f_coeffs(params, lc);
  const Exponents& e = lc.exps;
  return 0.5 - fc.a * std::pow(rho, e.alpha0 / 2.0) * std::pow(c, e.alpha1 / 2.0) -
         fc.b * std::pow(rho, e.alpha2 / 2.0);
}

double rho_max(const ModelParams& params, const LandscapeConstants& lc, double c) {
  if (!(c > 0.0)) throw validation_error("rho_max: c must be positive");
  const FCoeffs fc = f_coeffs(params, lc);
  const Exponents& e = lc.exps;
  // Stationarity of the two power terms: rho_c = A^{2/(a2-a0)} c^{a1/(a2-a0)}
  // with A = -(a0/a2) (a/b); a0 < 0 < a2 makes A positive.
  const double A = -(e.alpha0 / e.alpha2) * (fc.a / fc.b);
  return std::pow(A, 2.0 / (e.alpha2 - e.alpha0)) *
         std::pow(c, e.alpha1 / (e.alpha2 - e.alpha0));
}

std::pair<double, double> threshold_mass(const ModelParams& params,
                                         const LandscapeConstants& lc) {
  const FCoeffs fc = f_coeffs(params, lc);
  const Exponents& e = lc.exps;
  const double A = -(e.alpha0 / e.alpha2) * (fc.a / fc.b);
  const double K = fc.a * std::pow(A, e.alpha0 / (e.alpha2 - e.alpha0)) +
                   fc.b * std::pow(A, e.alpha2 / (e.alpha2 - e.alpha0));
  const double c0 = std::pow(1.0 / (2.0 * K), params.N / 2.0);
  return {K, c0};
}

std::pair<double, double> monotone_extension(const ModelParams& params,
                                             const LandscapeConstants& lc,
                                             double c1, double rho1, double c2) {
  if (!(c1 > 0.0 && rho1 > 0.0))
    throw validation_error("monotone_extension: c1 and rho1 must be positive");
  if (!(c2 > 0.0 && c2 <= c1))
    throw validation_error("monotone_extension: need 0 < c2 <= c1");
  if (landscape_f(params, lc, c1, rho1) < 0.0)
    throw validation_error("monotone_extension: f(c1, rho1) must be >= 0");
  return {(c2 / c1) * rho1, rho1};
}

double beta0(const ModelParams& params, const LandscapeConstants& lc) {
  const FCoeffs fc = f_coeffs(params, lc);
  return 0.5 - fc.b * std::pow(lc.rho0, lc.exps.alpha2 / 2.0);
}

LandscapeConstants landscape_constants(
    const ModelParams& params,
    const std::optional<std::filesystem::path>& cache_file) {
  validate(params);
  LandscapeConstants lc;
  const CachedConstants sc = sharp_constants(params.N, params.q, cache_file);
  lc.gn = sc.gn;
  lc.sobolev = sc.sobolev;
  lc.exps = exponents(params);
  const auto [K, c0] = threshold_mass(params, lc);
  lc.K = K;
  lc.c0 = c0;
  lc.rho0 = rho_max(params, lc, c0);
  lc.beta0 = beta0(params, lc);
  return lc;
}

}  // namespace nlslab
