#pragma once

#include <cmath>

namespace nlslab {

// Surface measure of the unit sphere S^{N-1}: 2 pi^{N/2} / Gamma(N/2).
inline double sphere_area(int N) {
  return 2.0 * std::pow(M_PI, 0.5 * N) / std::tgamma(0.5 * N);
}

// Volume of the unit ball in R^N.
inline double ball_volume(int N) { return sphere_area(N) / N; }

}  // namespace nlslab
