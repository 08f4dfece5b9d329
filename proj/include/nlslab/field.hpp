#pragma once

#include <array>
#include <complex>
#include <vector>

#include "nlslab/grid.hpp"
#include "nlslab/model.hpp"

namespace nlslab {

using complexd = std::complex<double>;

// Discretized member of H^1(R^N, C) on either backend grid.  Values are
// immutable by convention: operations return fresh fields.
struct FieldState {
  Grid grid;
  std::vector<complexd> values;
};

// Every scalar functional of one field, from one shared quadrature pass:
//   energy  = grad/2 - (mu/q) lq - lcrit/2*
//   pohozaev = grad - (mu N (q-2) / (2q)) lq - lcrit
//   lambda * mass = grad - mu lq - lcrit
struct FunctionalReport {
  double mass = 0.0;
  double grad = 0.0;
  double lq = 0.0;
  double lcrit = 0.0;
  double energy = 0.0;
  double pohozaev = 0.0;
  double lambda = 0.0;
};

FieldState zero_field(const Grid& grid);

FunctionalReport functionals(const FieldState& u, const ModelParams& params);

// Mass-preserving dilation u_s(x) = s^{N/2} u(s x), resampled by cubic
// interpolation (spline on radial grids, periodic tricubic on boxes).
// Throws numerical_error when the dilated support is not resolved.
FieldState dilate(const FieldState& u, double s);

// Energy along the dilation fiber, closed form in the report of u:
//   psi(s) = s^2/2 grad - (mu/q) s^{N(q-2)/2} lq - s^{2*}/2* lcrit.
double fiber_map(const FieldState& u, const ModelParams& params, double s);
double fiber_map(const FunctionalReport& rep, const ModelParams& params, double s);

// d psi / d s; equals pohozaev(u_s)/s.
double fiber_derivative(const FieldState& u, const ModelParams& params, double s);
double fiber_derivative(const FunctionalReport& rep, const ModelParams& params,
                        double s);

// Zeros of theta(s) = grad - (mu N(q-2)/(2q)) s^{alpha0} lq - s^{alpha2} lcrit,
// bracketed around its unique interior maximum; at most two.
std::vector<double> theta_zeros(const FieldState& u, const ModelParams& params);
std::vector<double> theta_zeros(const FunctionalReport& rep,
                                const ModelParams& params);
// Same with explicit term values (lets a caller zero one term out).
std::vector<double> theta_zeros_terms(double grad, double lq, double lcrit,
                                      const ModelParams& params);

// min over global phase and spatial translation of |phi - e^{i t} ref(.-y)|_H.
// Boxes search lattice shifts spectrally plus one sub-cell refinement;
// radial grids optimize the phase only.
double orbit_distance(const FieldState& phi, const FieldState& ref);

// Decreasing radial rearrangement of |u| (layer-cake volumes preserved; cell
// averages of the layer profile).  Result is a radial field.
FieldState rearrange_radial(const FieldState& u);

// -Lap u - mu |u|^{q-2} u - |u|^{2*-2} u; flux-form finite volumes on radial
// grids (the exact gradient of the discrete energy), spectral Laplacian on
// boxes.
FieldState variational_gradient(const FieldState& u, const ModelParams& params);

// --- small field algebra shared by the solver and harness modules ---

double l2_inner(const FieldState& a, const FieldState& b);   // Re <a, b>
complexd h1_inner(const FieldState& a, const FieldState& b); // complex H^1 pairing
double h1_norm(const FieldState& u);
double mass_of(const FieldState& u);
// Multiplicative rescale onto the mass sphere |u|_2^2 = c.
FieldState mass_rescale(const FieldState& u, double c);

// Box-only helpers.
FieldState translate(const FieldState& u, const std::array<double, 3>& shift);
// Mass centroid moved to the origin (circular mean per axis, spectral shift).
FieldState recenter(const FieldState& u);
// Radial profile sampled at the min-image distance from the box center
// (cubic-spline interpolation along the radius).
FieldState embed_radial_to_box(const FieldState& u, const BoxGrid& box);

}  // namespace nlslab
