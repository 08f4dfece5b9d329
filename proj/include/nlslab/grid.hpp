#pragma once

#include <cstddef>
#include <variant>
#include <vector>

namespace nlslab {

// Uniform radial mesh on [0, rmax]: n intervals, nodes r_i = i h.  Finite
// volumes: faces at (i+1/2) h, exact shell volumes as quadrature weights.
struct RadialGrid {
  int N = 3;
  double rmax = 0.0;
  int n = 0;

  double h() const { return rmax / n; }
  std::size_t nodes() const { return static_cast<std::size_t>(n) + 1; }
};

// Periodic box [-L/2, L/2)^N, n nodes per axis (power of two), x_j = -L/2 + j h.
struct BoxGrid {
  int N = 3;
  double L = 0.0;
  int n = 0;

  double h() const { return L / n; }
  std::size_t total() const {
    std::size_t t = 1;
    for (int d = 0; d < N; ++d) t *= static_cast<std::size_t>(n);
    return t;
  }
  // Signed integer frequency of axis index i, in [-n/2, n/2).
  int freq(int i) const { return i <= n / 2 - 1 ? i : i - n; }
  // Wavenumber 2 pi freq / L.
  double wavenumber(int i) const;
};

using Grid = std::variant<RadialGrid, BoxGrid>;

void validate(const Grid& grid);
bool same_grid(const Grid& a, const Grid& b);
int grid_dim(const Grid& grid);

// Cached radial quadrature data: node radii, face radii, exact cell volumes.
struct RadialQuadrature {
  std::vector<double> r;   // nodes, size n+1
  std::vector<double> rf;  // faces, size n
  std::vector<double> w;   // cell volumes, size n+1
  double h = 0.0;
  double area = 0.0;  // sphere_area(N)
};

RadialQuadrature radial_quadrature(const RadialGrid& grid);

}  // namespace nlslab
