#pragma once

// Shared helpers for the test binaries: independent quadrature oracles,
// deterministic random field generators, and a scratch-directory guard.
// Everything here is test-side plumbing, intentionally separate from the
// library implementations it cross-checks.

#include <unistd.h>

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "nlslab/constants.hpp"
#include "nlslab/field.hpp"
#include "nlslab/grid.hpp"
#include "nlslab/measures.hpp"

namespace testsup {

// Composite Simpson on a uniform grid (trapezoid fallback for the last
// interval when the sample count is even).  Distinct from the library's
// trapezoid quadrature on purpose.
inline double simpson_uniform(const std::vector<double>& f, double h) {
  const std::size_t n = f.size();
  if (n < 2) return 0.0;
  double acc = 0.0;
  std::size_t i = 0;
  for (; i + 2 < n; i += 2) acc += h / 3.0 * (f[i] + 4.0 * f[i + 1] + f[i + 2]);
  if (i + 1 < n) acc += 0.5 * h * (f[i] + f[i + 1]);
  return acc;
}

// integral of |u|^p r^{N-1} dr times the sphere area, Simpson weights.
inline double simpson_lp(const nlslab::RadialProfile& u, double p) {
  const double h = u.radii[1] - u.radii[0];
  std::vector<double> f(u.values.size());
  for (std::size_t i = 0; i < f.size(); ++i)
    f[i] = std::pow(std::abs(u.values[i]), p) * std::pow(u.radii[i], u.N - 1);
  return nlslab::sphere_area(u.N) * simpson_uniform(f, h);
}

// |u'|^2 r^{N-1} with fourth-order central differences in the interior.
inline double simpson_grad2(const nlslab::RadialProfile& u) {
  const double h = u.radii[1] - u.radii[0];
  const std::size_t n = u.values.size();
  std::vector<double> f(n, 0.0);
  for (std::size_t i = 2; i + 2 < n; ++i) {
    const double d = (-u.values[i + 2] + 8.0 * u.values[i + 1] -
                      8.0 * u.values[i - 1] + u.values[i - 2]) /
                     (12.0 * h);
    f[i] = d * d * std::pow(u.radii[i], u.N - 1);
  }
  f[1] = f[2];
  f[n - 2] = 0.0;
  return nlslab::sphere_area(u.N) * simpson_uniform(f, h);
}

// Deterministic radial trial profile: a positive sum of Gaussians with
// random centers, widths and weights.  Decays well inside rmax.
inline nlslab::RadialProfile random_bump_profile(std::mt19937_64& rng, int N,
                                                 double rmax = 24.0,
                                                 int n = 6000) {
  std::uniform_real_distribution<double> amp(0.2, 1.0);
  std::uniform_real_distribution<double> center(0.0, 3.0);
  std::uniform_real_distribution<double> width(0.6, 2.0);
  const int bumps = 1 + static_cast<int>(rng() % 3);
  std::vector<double> a(bumps), r0(bumps), w(bumps);
  for (int b = 0; b < bumps; ++b) {
    a[b] = amp(rng);
    r0[b] = center(rng);
    w[b] = width(rng);
  }
  nlslab::RadialProfile out;
  out.N = N;
  out.radii.resize(n + 1);
  out.values.resize(n + 1);
  const double h = rmax / n;
  for (int i = 0; i <= n; ++i) {
    const double r = h * i;
    double v = 0.0;
    for (int b = 0; b < bumps; ++b)
      v += a[b] * std::exp(-(r - r0[b]) * (r - r0[b]) / (w[b] * w[b]));
    out.radii[i] = r;
    out.values[i] = v;
  }
  return out;
}

// Smooth complex random field on a radial grid: Gaussian envelope times a
// low-order radial polynomial, with an optional constant phase twist.
inline nlslab::FieldState random_radial_field(std::mt19937_64& rng,
                                              const nlslab::RadialGrid& grid,
                                              bool complex_phase = false) {
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  std::uniform_real_distribution<double> width(0.5, 2.5);
  const double w = width(rng);
  const double c0 = coef(rng), c1 = coef(rng), c2 = coef(rng);
  const double phase = complex_phase ? 3.0 * coef(rng) : 0.0;
  nlslab::FieldState u = nlslab::zero_field(nlslab::Grid{grid});
  for (std::size_t i = 0; i < u.values.size(); ++i) {
    const double r = grid.h() * static_cast<double>(i);
    const double env = std::exp(-r * r / (2.0 * w * w));
    const double val = (1.0 + c0 + c1 * r + c2 * r * r) * env;
    u.values[i] = std::polar(val, phase * r * r / (1.0 + r * r));
  }
  return u;
}

// Smooth complex random field on a box grid: a few Gaussian bumps at random
// centers with random phases.
inline nlslab::FieldState random_box_field(std::mt19937_64& rng,
                                           const nlslab::BoxGrid& grid) {
  std::uniform_real_distribution<double> pos(-grid.L / 6.0, grid.L / 6.0);
  std::uniform_real_distribution<double> amp(0.3, 1.0);
  std::uniform_real_distribution<double> width(0.8, 2.0);
  std::uniform_real_distribution<double> ph(0.0, 6.283185307179586);
  const int bumps = 1 + static_cast<int>(rng() % 2);
  std::vector<std::array<double, 3>> c(bumps);
  std::vector<double> a(bumps), w(bumps), t(bumps);
  for (int b = 0; b < bumps; ++b) {
    c[b] = {pos(rng), pos(rng), pos(rng)};
    a[b] = amp(rng);
    w[b] = width(rng);
    t[b] = ph(rng);
  }
  nlslab::FieldState u = nlslab::zero_field(nlslab::Grid{grid});
  const int n = grid.n;
  const double h = grid.h();
  for (int iz = 0; iz < n; ++iz)
    for (int iy = 0; iy < n; ++iy)
      for (int ix = 0; ix < n; ++ix) {
        const double x = -0.5 * grid.L + h * ix;
        const double y = -0.5 * grid.L + h * iy;
        const double z = -0.5 * grid.L + h * iz;
        nlslab::complexd v = 0.0;
        for (int b = 0; b < bumps; ++b) {
          const double dx = x - c[b][0], dy = y - c[b][1], dz = z - c[b][2];
          const double r2 = dx * dx + dy * dy + dz * dz;
          v += std::polar(a[b] * std::exp(-r2 / (w[b] * w[b])), t[b]);
        }
        u.values[(static_cast<std::size_t>(iz) * n + iy) * n + ix] = v;
      }
  return u;
}

// Scratch directory under the system temp root, removed on destruction.
struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    path = std::filesystem::temp_directory_path() /
           (tag + "-" + std::to_string(::getpid()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
};

}  // namespace testsup
