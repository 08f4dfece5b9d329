#pragma once

#include <limits>
#include <string>
#include <vector>

#include "nlslab/field.hpp"
#include "nlslab/model.hpp"

namespace nlslab {

struct AdmissiblePair {
  double p = 0.0;
  double r = 0.0;
};

// Pair generated by a power alpha in (2, 2*], plus the T-exponent sigma of
// the nonlinear space-time bound.
struct PairWithSigma {
  AdmissiblePair pair;
  double sigma = 0.0;
};

PairWithSigma admissible_pair(int N, double alpha);

// Free Schroedinger propagator on the box (spectral, unitary).
FieldState free_propagate(const FieldState& phi, double t);

struct StrichartzReport {
  AdmissiblePair pair1, pair2;  // from alpha = q and alpha = 2*
  double sigma1 = 0.0, sigma2 = 0.0;
  double Y1 = 0.0, X1 = 0.0;
  double Y2 = 0.0, X2 = 0.0;
  double Y = 0.0;  // Y1 + Y2
  double X = 0.0;  // X1 + X2
};

// Space-time norms of the free evolution of phi over [0, T]:
//   Y = (integral of ||u(t)||_r^p)^(1/p),  X the same with ||u||_r + ||grad u||_r.
// Trapezoid quadrature on time_nodes+1 uniform samples.
struct PairNorms {
  double Y = 0.0;
  double X = 0.0;
};
PairNorms strichartz_norm(const FieldState& phi, const AdmissiblePair& pair,
                          double T, int time_nodes);

// Both designated pairs at once.
StrichartzReport strichartz_report(const FieldState& phi,
                                   const ModelParams& params, double T,
                                   int time_nodes);

struct EvolveOptions {
  int sample_stride = 10;  // steps between trace samples (first/last always kept)
  double blowup_gradient = 1e8;  // squared-gradient ceiling; exceeding halts
  // Squared-gradient level whose crossing is flagged per sample (NaN = none).
  double cap_rho = std::numeric_limits<double>::quiet_NaN();
};

struct EvolutionTrace {
  std::vector<double> times;
  std::vector<double> mass;
  std::vector<double> energy;
  std::vector<double> grad;
  std::vector<double> orbit_dist;  // empty without a reference field
  std::vector<char> cap_flag;      // per sample, grad >= cap_rho
  double dt = 0.0;
  bool blowup = false;
  std::string note;  // halt reason when blowup = true
};

struct EvolveResult {
  EvolutionTrace trace;
  FieldState final_state;
};

// Strang split-step integration of i u_t + Lap u + mu u|u|^{q-2} + u|u|^{2*-2} = 0
// on the periodic box: half nonlinear phase, full linear spectral step, half
// nonlinear phase. A numerical blow-up (non-finite values, or the squared
// gradient passing the ceiling at a sample) halts with the partial trace and
// the blowup flag set; it never throws for blow-up.
EvolveResult evolve_splitstep(const FieldState& phi, const ModelParams& params,
                              double T, double dt,
                              const EvolveOptions& opts = {},
                              const FieldState* orbit_reference = nullptr);

struct PicardReport {
  std::vector<double> d;        // successive iterate distances in Y_T
  std::vector<double> ratios;   // d[k+1]/d[k]
  bool diverged = false;        // 3 consecutive ratios >= 1, or non-finite d
  std::vector<FieldState> at_T; // per-iterate snapshot at t = T
};

// Duhamel fixed-point iteration u -> e^{itL}phi + i int_0^t e^{i(t-s)L} g(u) ds
// with left-rectangle time quadrature on time_nodes subintervals, starting
// from the free evolution.
PicardReport picard_iterate(const FieldState& phi, const ModelParams& params,
                            double T, int k_max, int time_nodes);

}  // namespace nlslab
