#pragma once

#include <filesystem>
#include <optional>
#include <vector>

namespace nlslab {

// Sharp constant S in  S |f|_{2*}^2 <= |grad f|_2^2.
struct SobolevConstant {
  int N = 0;
  double value = 0.0;
};

// Sharp constant C in  |f|_q <= C |grad f|_2^beta |f|_2^{1-beta},
// beta = N(1/2 - 1/q).
struct GNConstant {
  int N = 0;
  double q = 0.0;
  double beta = 0.0;
  double value = 0.0;
};

// Real radial samples with r^{N-1} volume weighting; radii strictly increasing.
struct RadialProfile {
  std::vector<double> radii;
  std::vector<double> values;
  int N = 0;
};

// Quadrature of the Rayleigh quotient |grad f|_2^2 / |f|_{2*}^2 for the
// profile's piecewise-linear interpolant (gradient term exact per interval).
double sobolev_quotient(const RadialProfile& profile);

// Ratio |f|_q / (|grad f|_2^beta |f|_2^{1-beta}) for the same interpolant.
double gn_ratio(const RadialProfile& profile, double q);

// S from quadrature on the extremal family (1+|x|^2)^{-(N-2)/2}.
SobolevConstant sobolev_constant(int N);

// Sharp constant realized by the positive decaying solution Q of
// -Q'' - (N-1)Q'/r + Q = Q^{q-1},  Q'(0) = 0.
GNConstant gn_constant(int N, double q);

// The solution Q above, found by bisection on Q(0); strictly decreasing,
// exponentially matched tail beyond the shooting range.
RadialProfile shoot_ground_state(int N, double q);

// Plain-text cache, one record per line: "N q S C beta", 17 significant
// digits.  Whole-file replacement on store (last writer wins).
struct CachedConstants {
  SobolevConstant sobolev;
  GNConstant gn;
};

std::optional<CachedConstants> cache_lookup(const std::filesystem::path& file,
                                            int N, double q);
void cache_store(const std::filesystem::path& file, const CachedConstants& rec);

// Lookup, computing and storing on a miss.
CachedConstants sharp_constants(int N, double q,
                                const std::optional<std::filesystem::path>& cache_file = {});

}  // namespace nlslab
