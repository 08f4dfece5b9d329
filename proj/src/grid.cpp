#include "nlslab/grid.hpp"

#include <cmath>

#include "nlslab/errors.hpp"
#include "nlslab/measures.hpp"

namespace nlslab {

double BoxGrid::wavenumber(int i) const { return 2.0 * M_PI * freq(i) / L; }

void validate(const Grid& grid) {
  if (const auto* rg = std::get_if<RadialGrid>(&grid)) {
    if (rg->N < 2) throw validation_error("radial grid: dimension must be >= 2");
    if (!(rg->rmax > 0.0)) throw validation_error("radial grid: rmax must be positive");
    if (rg->n < 8) throw validation_error("radial grid: need at least 8 intervals");
    return;
  }
  const auto& bg = std::get<BoxGrid>(grid);
  if (bg.N < 1 || bg.N > 3)
    throw validation_error("box grid: dimension must be in {1, 2, 3}");
  if (!(bg.L > 0.0)) throw validation_error("box grid: side length must be positive");
  if (bg.n < 4 || (bg.n & (bg.n - 1)) != 0)
    throw validation_error("box grid: nodes per axis must be a power of two >= 4");
}

bool same_grid(const Grid& a, const Grid& b) {
  if (a.index() != b.index()) return false;
  if (const auto* ra = std::get_if<RadialGrid>(&a)) {
    const auto& rb = std::get<RadialGrid>(b);
    return ra->N == rb.N && ra->rmax == rb.rmax && ra->n == rb.n;
  }
  const auto& ba = std::get<BoxGrid>(a);
  const auto& bb = std::get<BoxGrid>(b);
  return ba.N == bb.N && ba.L == bb.L && ba.n == bb.n;
}

int grid_dim(const Grid& grid) {
  return std::visit([](const auto& g) { return g.N; }, grid);
}

RadialQuadrature radial_quadrature(const RadialGrid& grid) {
  validate(Grid{grid});
  RadialQuadrature quad;
  quad.h = grid.h();
  quad.area = sphere_area(grid.N);
  const int n = grid.n;
  quad.r.resize(n + 1);
  quad.rf.resize(n);
  quad.w.resize(n + 1);
  for (int i = 0; i <= n; ++i) quad.r[i] = quad.h * i;
  for (int i = 0; i < n; ++i) quad.rf[i] = quad.h * (i + 0.5);
  // Cell i spans [edge_i, edge_{i+1}] with edges {0, faces..., rmax}.
  double prev_pow = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double edge = (i < n) ? quad.rf[i] : grid.rmax;
    const double edge_pow = std::pow(edge, grid.N);
    quad.w[i] = quad.area / grid.N * (edge_pow - prev_pow);
    prev_pow = edge_pow;
  }
  return quad;
}

}  // namespace nlslab
