#include "nlslab/field.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "nlslab/errors.hpp"
#include "nlslab/fft3.hpp"
#include "nlslab/landscape.hpp"
#include "nlslab/measures.hpp"

namespace nlslab {

namespace {

constexpr double kTailFraction = 1e-8;  // dilation support gate

double sqr(double x) { return x * x; }
double abs2(complexd z) { return sqr(z.real()) + sqr(z.imag()); }

void check_sized(const FieldState& u) {
  validate(u.grid);
  const std::size_t want = std::visit(
      [](const auto& g) {
        if constexpr (std::is_same_v<std::decay_t<decltype(g)>, RadialGrid>)
          return g.nodes();
        else
          return g.total();
      },
      u.grid);
  if (u.values.size() != want)
    throw validation_error("field: value count does not match the grid");
}

// ---------------------------------------------------------------- radial ---

struct RadialSums {
  double mass = 0.0, grad = 0.0, lq = 0.0, lcrit = 0.0;
};

RadialSums radial_sums(const RadialGrid& grid, const std::vector<complexd>& v,
                       double q, double two_star) {
  const RadialQuadrature quad = radial_quadrature(grid);
  RadialSums s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double a2 = abs2(v[i]);
    s.mass += quad.w[i] * a2;
    const double a = std::sqrt(a2);
    s.lq += quad.w[i] * std::pow(a, q);
    s.lcrit += quad.w[i] * std::pow(a, two_star);
  }
  for (int i = 0; i < grid.n; ++i) {
    const double fr = std::pow(quad.rf[i], grid.N - 1);
    s.grad += fr * abs2(v[i + 1] - v[i]);
  }
  s.grad *= quad.area / quad.h;
  return s;
}

// Flux-form -Lap: the exact w-weighted gradient of the discrete kinetic term.
std::vector<complexd> radial_neg_lap(const RadialGrid& grid,
                                     const std::vector<complexd>& v) {
  const RadialQuadrature quad = radial_quadrature(grid);
  const int n = grid.n;
  std::vector<complexd> flux(n);
  for (int i = 0; i < n; ++i)
    flux[i] = std::pow(quad.rf[i], grid.N - 1) * (v[i + 1] - v[i]) / quad.h;
  std::vector<complexd> out(n + 1);
  out[0] = -quad.area * flux[0] / quad.w[0];
  for (int i = 1; i < n; ++i)
    out[i] = quad.area * (flux[i - 1] - flux[i]) / quad.w[i];
  out[n] = quad.area * flux[n - 1] / quad.w[n];
  return out;
}

// Natural-at-rmax, clamped-at-zero cubic spline through (r_i, y_i).
struct Spline {
  std::vector<double> y, m;  // values and second derivatives at nodes
  double h = 0.0;

  double eval(double r) const {
    const std::size_t n = y.size() - 1;
    if (r <= 0.0) return y[0];
    double pos = r / h;
    if (pos >= static_cast<double>(n)) return 0.0;
    const std::size_t i = static_cast<std::size_t>(pos);
    const double t = pos - static_cast<double>(i);
    const double a = 1.0 - t;
    return a * y[i] + t * y[i + 1] +
           h * h / 6.0 * ((a * a * a - a) * m[i] + (t * t * t - t) * m[i + 1]);
  }
};

Spline build_spline(const std::vector<double>& y, double h) {
  const std::size_t n = y.size() - 1;
  Spline sp;
  sp.y = y;
  sp.h = h;
  sp.m.assign(n + 1, 0.0);
  // Tridiagonal system for second derivatives; clamped y'(0) = 0 at the
  // center (radial smoothness), natural at the outer edge.
  std::vector<double> diag(n + 1), rhs(n + 1), sub(n + 1);
  diag[0] = 2.0;
  rhs[0] = 6.0 / (h * h) * (y[1] - y[0]);
  sub[0] = 1.0;  // superdiagonal of row 0
  for (std::size_t i = 1; i < n; ++i) {
    diag[i] = 4.0;
    rhs[i] = 6.0 / (h * h) * (y[i + 1] - 2.0 * y[i] + y[i - 1]);
  }
  diag[n] = 1.0;
  rhs[n] = 0.0;
  // Forward sweep (sub/super are 1 except row 0's super and row n's sub).
  double c0 = sub[0] / diag[0];
  rhs[0] /= diag[0];
  std::vector<double> cp(n + 1, 0.0);
  cp[0] = c0;
  for (std::size_t i = 1; i <= n; ++i) {
    const double sub_i = (i == n) ? 0.0 : 1.0;
    const double denom = diag[i] - sub_i * cp[i - 1];
    cp[i] = ((i < n) ? 1.0 : 0.0) / denom;
    rhs[i] = (rhs[i] - sub_i * rhs[i - 1]) / denom;
  }
  sp.m[n] = rhs[n];
  for (std::size_t i = n; i-- > 0;) sp.m[i] = rhs[i] - cp[i] * sp.m[i + 1];
  return sp;
}

double radial_tail_mass(const RadialGrid& grid, const std::vector<complexd>& v,
                        double from_r) {
  const RadialQuadrature quad = radial_quadrature(grid);
  double tail = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i)
    if (quad.r[i] >= from_r) tail += quad.w[i] * abs2(v[i]);
  return tail;
}

FieldState dilate_radial(const FieldState& u, const RadialGrid& grid, double s) {
  const std::vector<complexd>& v = u.values;
  if (s < 1.0) {
    const double mass = radial_sums(grid, v, 2.0, 2.0).mass;
    const double escaped = radial_tail_mass(grid, v, s * grid.rmax);
    if (escaped > kTailFraction * mass)
      throw numerical_error(
          "dilate: support escapes the radial grid (tail fraction " +
          std::to_string(escaped / mass) + " beyond r = " +
          std::to_string(s * grid.rmax) + ")");
  }
  std::vector<double> re(v.size()), im(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    re[i] = v[i].real();
    im[i] = v[i].imag();
  }
  const Spline sre = build_spline(re, grid.h());
  const Spline sim = build_spline(im, grid.h());
  const double amp = std::pow(s, 0.5 * grid.N);
  FieldState out{u.grid, std::vector<complexd>(v.size())};
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double r = s * grid.h() * static_cast<double>(i);
    out.values[i] = amp * complexd(sre.eval(r), sim.eval(r));
  }
  return out;
}

// ------------------------------------------------------------------- box ---

struct BoxIndexer {
  int N, n;
  std::size_t stride[3] = {0, 0, 0};  // last axis fastest

  explicit BoxIndexer(const BoxGrid& g) : N(g.N), n(g.n) {
    std::size_t s = 1;
    for (int d = N - 1; d >= 0; --d) {
      stride[d] = s;
      s *= static_cast<std::size_t>(n);
    }
  }
};

// |k|^2 for the flattened spectral index.
std::vector<double> k2_table(const BoxGrid& grid) {
  std::vector<double> axis(grid.n);
  for (int i = 0; i < grid.n; ++i) axis[i] = sqr(grid.wavenumber(i));
  std::vector<double> out(grid.total());
  const BoxIndexer ix(grid);
  std::size_t pos = 0;
  if (grid.N == 1) {
    for (int i0 = 0; i0 < grid.n; ++i0) out[pos++] = axis[i0];
  } else if (grid.N == 2) {
    for (int i0 = 0; i0 < grid.n; ++i0)
      for (int i1 = 0; i1 < grid.n; ++i1) out[pos++] = axis[i0] + axis[i1];
  } else {
    for (int i0 = 0; i0 < grid.n; ++i0)
      for (int i1 = 0; i1 < grid.n; ++i1) {
        const double partial = axis[i0] + axis[i1];
        for (int i2 = 0; i2 < grid.n; ++i2) out[pos++] = partial + axis[i2];
      }
  }
  return out;
}

double box_cell(const BoxGrid& grid) {
  double cell = 1.0;
  for (int d = 0; d < grid.N; ++d) cell *= grid.h();
  return cell;
}

double box_grad2(const BoxGrid& grid, const std::vector<complexd>& v) {
  std::vector<complexd> hat = v;
  fft_forward(grid, hat);
  const std::vector<double> k2 = k2_table(grid);
  double acc = 0.0;
  for (std::size_t i = 0; i < hat.size(); ++i) acc += k2[i] * abs2(hat[i]);
  return acc * box_cell(grid) / static_cast<double>(grid.total());
}

double box_tail_mass_outside(const BoxGrid& grid, const std::vector<complexd>& v,
                             double half_extent) {
  // Mass outside the centered sup-norm ball of the given half extent.
  const BoxIndexer ix(grid);
  const double cell = box_cell(grid);
  double tail = 0.0;
  std::size_t pos = 0;
  const int n = grid.n;
  auto coord = [&](int i) { return -grid.L / 2 + grid.h() * i; };
  if (grid.N != 3) {
    // Generic slow path for N = 1, 2.
    for (std::size_t flat = 0; flat < v.size(); ++flat) {
      std::size_t rem = flat;
      double m = 0.0;
      for (int d = 0; d < grid.N; ++d) {
        const int id = static_cast<int>(rem / ix.stride[d]);
        rem %= ix.stride[d];
        m = std::max(m, std::abs(coord(id)));
      }
      if (m > half_extent) tail += cell * abs2(v[flat]);
    }
    return tail;
  }
  for (int i0 = 0; i0 < n; ++i0) {
    const double a0 = std::abs(coord(i0));
    for (int i1 = 0; i1 < n; ++i1) {
      const double a01 = std::max(a0, std::abs(coord(i1)));
      for (int i2 = 0; i2 < n; ++i2, ++pos) {
        const double m = std::max(a01, std::abs(coord(i2)));
        if (m > half_extent) tail += cell * abs2(v[pos]);
      }
    }
  }
  return tail;
}

// Catmull-Rom weights for local coordinate t in [0, 1).
std::array<double, 4> catmull_rom(double t) {
  const double t2 = t * t, t3 = t2 * t;
  return {-0.5 * t3 + t2 - 0.5 * t, 1.5 * t3 - 2.5 * t2 + 1.0,
          -1.5 * t3 + 2.0 * t2 + 0.5 * t, 0.5 * t3 - 0.5 * t2};
}

FieldState dilate_box(const FieldState& u, const BoxGrid& grid, double s) {
  const std::vector<complexd>& v = u.values;
  if (s < 1.0) {
    const double cell = box_cell(grid);
    double mass = 0.0;
    for (const complexd& z : v) mass += cell * abs2(z);
    const double escaped = box_tail_mass_outside(grid, v, s * grid.L / 2.0);
    if (escaped > kTailFraction * mass)
      throw numerical_error(
          "dilate: support escapes the box (tail fraction " +
          std::to_string(escaped / mass) + ")");
  }
  if (grid.N != 3)
    throw validation_error("dilate: box dilation implemented for N = 3");
  const int n = grid.n;
  const double amp = std::pow(s, 0.5 * grid.N);
  const BoxIndexer ix(grid);
  FieldState out{u.grid, std::vector<complexd>(v.size())};
  // Sample u(s x) with periodic wrap; separable cubic convolution.
  auto wrap = [n](int i) { return ((i % n) + n) % n; };
  std::size_t pos = 0;
  for (int i0 = 0; i0 < n; ++i0)
    for (int i1 = 0; i1 < n; ++i1)
      for (int i2 = 0; i2 < n; ++i2, ++pos) {
        const int idx[3] = {i0, i1, i2};
        double base[3];
        std::array<double, 4> wts[3];
        int cells[3];
        for (int d = 0; d < 3; ++d) {
          const double x = -grid.L / 2 + grid.h() * idx[d];
          // Source sample position in index units.
          double p = (s * x + grid.L / 2) / grid.h();
          p -= std::floor(p / n) * n;  // into [0, n)
          const int c = static_cast<int>(std::floor(p));
          base[d] = p - c;
          cells[d] = c;
          wts[d] = catmull_rom(base[d]);
        }
        complexd acc = 0.0;
        for (int a = 0; a < 4; ++a) {
          const int j0 = wrap(cells[0] + a - 1);
          for (int b = 0; b < 4; ++b) {
            const int j1 = wrap(cells[1] + b - 1);
            const double wab = wts[0][a] * wts[1][b];
            for (int c = 0; c < 4; ++c) {
              const int j2 = wrap(cells[2] + c - 1);
              acc += wab * wts[2][c] *
                     v[j0 * ix.stride[0] + j1 * ix.stride[1] + j2];
            }
          }
        }
        out.values[pos] = amp * acc;
      }
  return out;
}

}  // namespace

// ---------------------------------------------------------------- public ---

FieldState zero_field(const Grid& grid) {
  validate(grid);
  const std::size_t count = std::visit(
      [](const auto& g) {
        if constexpr (std::is_same_v<std::decay_t<decltype(g)>, RadialGrid>)
          return g.nodes();
        else
          return g.total();
      },
      grid);
  return FieldState{grid, std::vector<complexd>(count, complexd(0.0, 0.0))};
}

FunctionalReport functionals(const FieldState& u, const ModelParams& params) {
  check_sized(u);
  validate(params);
  if (grid_dim(u.grid) != params.N)
    throw validation_error("functionals: grid and params dimension mismatch");
  const double two_star = params.two_star();
  FunctionalReport rep;
  if (const auto* rg = std::get_if<RadialGrid>(&u.grid)) {
    const RadialSums s = radial_sums(*rg, u.values, params.q, two_star);
    rep.mass = s.mass;
    rep.grad = s.grad;
    rep.lq = s.lq;
    rep.lcrit = s.lcrit;
  } else {
    const auto& bg = std::get<BoxGrid>(u.grid);
    const double cell = box_cell(bg);
    double mass = 0.0, lq = 0.0, lcrit = 0.0;
    for (const complexd& z : u.values) {
      const double a2 = abs2(z);
      mass += a2;
      const double a = std::sqrt(a2);
      lq += std::pow(a, params.q);
      lcrit += std::pow(a, two_star);
    }
    rep.mass = cell * mass;
    rep.lq = cell * lq;
    rep.lcrit = cell * lcrit;
    rep.grad = box_grad2(bg, u.values);
  }
  rep.energy = 0.5 * rep.grad - params.mu / params.q * rep.lq - rep.lcrit / two_star;
  rep.pohozaev = rep.grad -
                 params.mu * params.N * (params.q - 2.0) / (2.0 * params.q) * rep.lq -
                 rep.lcrit;
  rep.lambda = rep.mass > 0.0
                   ? (rep.grad - params.mu * rep.lq - rep.lcrit) / rep.mass
                   : 0.0;
  return rep;
}

FieldState dilate(const FieldState& u, double s) {
  check_sized(u);
  if (!(s > 0.0)) throw validation_error("dilate: s must be positive");
  if (const auto* rg = std::get_if<RadialGrid>(&u.grid))
    return dilate_radial(u, *rg, s);
  return dilate_box(u, std::get<BoxGrid>(u.grid), s);
}

double fiber_map(const FunctionalReport& rep, const ModelParams& params, double s) {
  if (!(s > 0.0)) throw validation_error("fiber_map: s must be positive");
  const double p_sub = params.N * (params.q - 2.0) / 2.0;
  const double two_star = params.two_star();
  return 0.5 * s * s * rep.grad -
         params.mu / params.q * std::pow(s, p_sub) * rep.lq -
         std::pow(s, two_star) / two_star * rep.lcrit;
}

double fiber_map(const FieldState& u, const ModelParams& params, double s) {
  return fiber_map(functionals(u, params), params, s);
}

double fiber_derivative(const FunctionalReport& rep, const ModelParams& params,
                        double s) {
  if (!(s > 0.0)) throw validation_error("fiber_derivative: s must be positive");
  const double p_sub = params.N * (params.q - 2.0) / 2.0;
  const double two_star = params.two_star();
  return s * rep.grad -
         params.mu / params.q * p_sub * std::pow(s, p_sub - 1.0) * rep.lq -
         std::pow(s, two_star - 1.0) * rep.lcrit;
}

double fiber_derivative(const FieldState& u, const ModelParams& params, double s) {
  return fiber_derivative(functionals(u, params), params, s);
}

std::vector<double> theta_zeros_terms(double grad, double lq, double lcrit,
                                      const ModelParams& params) {
  const Exponents e = exponents(params);
  const double A = params.mu * params.N * (params.q - 2.0) / (2.0 * params.q) * lq;
  const double B = lcrit;
  auto theta = [&](double s) {
    return grad - A * std::pow(s, e.alpha0) - B * std::pow(s, e.alpha2);
  };
  if (!(grad > 0.0)) return {};
  const double tol = 1e-12 * grad;
  auto refine = [&](double lo, double hi) {
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (std::abs(theta(mid)) <= tol || hi - lo <= 1e-15 * hi) return mid;
      // theta is increasing left of the max and decreasing right of it; pick
      // by sign relative to the bracket endpoints' signs.
      if ((theta(lo) < 0.0) == (theta(mid) < 0.0))
        lo = mid;
      else
        hi = mid;
    }
    return 0.5 * (lo + hi);
  };
  if (A <= 0.0 && B <= 0.0) return {};
  if (A <= 0.0) return {std::pow(grad / B, 1.0 / e.alpha2)};
  if (B <= 0.0) return {std::pow(grad / A, 1.0 / e.alpha0)};
  // Unique interior maximum of theta.
  const double s_star =
      std::pow(-e.alpha0 * A / (e.alpha2 * B), 1.0 / (e.alpha2 - e.alpha0));
  const double peak = theta(s_star);
  if (peak < -tol) return {};
  if (peak <= tol) return {s_star};
  double lo = s_star;
  while (theta(lo) > 0.0) lo *= 0.5;
  double hi = s_star;
  while (theta(hi) > 0.0) hi *= 2.0;
  return {refine(lo, s_star), refine(s_star, hi)};
}

std::vector<double> theta_zeros(const FunctionalReport& rep,
                                const ModelParams& params) {
  return theta_zeros_terms(rep.grad, rep.lq, rep.lcrit, params);
}

std::vector<double> theta_zeros(const FieldState& u, const ModelParams& params) {
  return theta_zeros(functionals(u, params), params);
}

FieldState variational_gradient(const FieldState& u, const ModelParams& params) {
  check_sized(u);
  validate(params);
  if (grid_dim(u.grid) != params.N)
    throw validation_error("variational_gradient: dimension mismatch");
  const double two_star = params.two_star();
  FieldState out{u.grid, {}};
  if (const auto* rg = std::get_if<RadialGrid>(&u.grid)) {
    out.values = radial_neg_lap(*rg, u.values);
  } else {
    const auto& bg = std::get<BoxGrid>(u.grid);
    std::vector<complexd> hat = u.values;
    fft_forward(bg, hat);
    const std::vector<double> k2 = k2_table(bg);
    const double scale = 1.0 / static_cast<double>(bg.total());
    for (std::size_t i = 0; i < hat.size(); ++i) hat[i] *= k2[i] * scale;
    fft_backward(bg, hat);
    out.values = std::move(hat);
  }
  for (std::size_t i = 0; i < u.values.size(); ++i) {
    const double a = std::abs(u.values[i]);
    if (a > 0.0)
      out.values[i] -= (params.mu * std::pow(a, params.q - 2.0) +
                        std::pow(a, two_star - 2.0)) *
                       u.values[i];
  }
  return out;
}

// ------------------------------------------------------- inner products ---

namespace {

complexd radial_h1_pairing(const RadialGrid& grid, const std::vector<complexd>& a,
                           const std::vector<complexd>& b) {
  const RadialQuadrature quad = radial_quadrature(grid);
  complexd acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    acc += quad.w[i] * a[i] * std::conj(b[i]);
  complexd kin = 0.0;
  for (int i = 0; i < grid.n; ++i) {
    const double fr = std::pow(quad.rf[i], grid.N - 1);
    kin += fr * (a[i + 1] - a[i]) * std::conj(b[i + 1] - b[i]);
  }
  return acc + quad.area / quad.h * kin;
}

complexd box_h1_pairing(const BoxGrid& grid, const std::vector<complexd>& a,
                        const std::vector<complexd>& b) {
  std::vector<complexd> ah = a, bh = b;
  fft_forward(grid, ah);
  fft_forward(grid, bh);
  const std::vector<double> k2 = k2_table(grid);
  complexd acc = 0.0;
  for (std::size_t i = 0; i < ah.size(); ++i)
    acc += (1.0 + k2[i]) * ah[i] * std::conj(bh[i]);
  return acc * box_cell(grid) / static_cast<double>(grid.total());
}

}  // namespace

complexd h1_inner(const FieldState& a, const FieldState& b) {
  check_sized(a);
  check_sized(b);
  if (!same_grid(a.grid, b.grid))
    throw validation_error("h1_inner: grid mismatch");
  if (const auto* rg = std::get_if<RadialGrid>(&a.grid))
    return radial_h1_pairing(*rg, a.values, b.values);
  return box_h1_pairing(std::get<BoxGrid>(a.grid), a.values, b.values);
}

double h1_norm(const FieldState& u) {
  return std::sqrt(std::max(0.0, h1_inner(u, u).real()));
}

double l2_inner(const FieldState& a, const FieldState& b) {
  check_sized(a);
  check_sized(b);
  if (!same_grid(a.grid, b.grid))
    throw validation_error("l2_inner: grid mismatch");
  complexd acc = 0.0;
  if (const auto* rg = std::get_if<RadialGrid>(&a.grid)) {
    const RadialQuadrature quad = radial_quadrature(*rg);
    for (std::size_t i = 0; i < a.values.size(); ++i)
      acc += quad.w[i] * a.values[i] * std::conj(b.values[i]);
  } else {
    const auto& bg = std::get<BoxGrid>(a.grid);
    for (std::size_t i = 0; i < a.values.size(); ++i)
      acc += a.values[i] * std::conj(b.values[i]);
    acc *= box_cell(bg);
  }
  return acc.real();
}

double mass_of(const FieldState& u) { return l2_inner(u, u); }

FieldState mass_rescale(const FieldState& u, double c) {
  if (!(c > 0.0)) throw validation_error("mass_rescale: c must be positive");
  const double m = mass_of(u);
  if (!(m > 0.0)) throw validation_error("mass_rescale: zero field");
  const double factor = std::sqrt(c / m);
  FieldState out = u;
  for (complexd& z : out.values) z *= factor;
  return out;
}

// --------------------------------------------------------- orbit metric ---

namespace {

double orbit_distance_radial(const FieldState& phi, const FieldState& ref) {
  // Optimal global phase, then an explicit subtraction: evaluating the norm
  // of the difference directly stays accurate when phi is on (or near) the
  // orbit, where the norm-minus-correlation form cancels catastrophically.
  const complexd corr = h1_inner(phi, ref);
  const complexd rot =
      std::abs(corr) > 0.0 ? corr / std::abs(corr) : complexd(1.0);
  FieldState diff = phi;
  for (std::size_t i = 0; i < diff.values.size(); ++i)
    diff.values[i] -= rot * ref.values[i];
  return h1_norm(diff);
}

double orbit_distance_box(const FieldState& phi, const FieldState& ref,
                          const BoxGrid& grid) {
  std::vector<complexd> ph = phi.values, rh = ref.values;
  fft_forward(grid, ph);
  fft_forward(grid, rh);
  const std::vector<double> k2 = k2_table(grid);
  const double scale = box_cell(grid) / static_cast<double>(grid.total());
  std::vector<complexd> w(ph.size());
  for (std::size_t i = 0; i < ph.size(); ++i)
    w[i] = (1.0 + k2[i]) * ph[i] * std::conj(rh[i]);
  // Correlation over lattice shifts: inverse transform of w.
  std::vector<complexd> corr = w;
  fft_backward(grid, corr);
  std::size_t best = 0;
  double best_abs = -1.0;
  for (std::size_t i = 0; i < corr.size(); ++i) {
    const double a = std::abs(corr[i]);
    if (a > best_abs) {
      best_abs = a;
      best = i;
    }
  }
  // Per-axis quadratic refinement of |corr| around the winning lattice shift,
  // then one direct off-lattice evaluation.
  const BoxIndexer ix(grid);
  int bi[3] = {0, 0, 0};
  {
    std::size_t rem = best;
    for (int d = 0; d < grid.N; ++d) {
      bi[d] = static_cast<int>(rem / ix.stride[d]);
      rem %= ix.stride[d];
    }
  }
  auto corr_at = [&](const int idx[3]) {
    std::size_t flat = 0;
    for (int d = 0; d < grid.N; ++d)
      flat += static_cast<std::size_t>(((idx[d] % grid.n) + grid.n) % grid.n) *
              ix.stride[d];
    return std::abs(corr[flat]);
  };
  double offset[3] = {0.0, 0.0, 0.0};
  for (int d = 0; d < grid.N; ++d) {
    int lo[3] = {bi[0], bi[1], bi[2]}, hi[3] = {bi[0], bi[1], bi[2]};
    lo[d] -= 1;
    hi[d] += 1;
    const double fm = corr_at(lo), f0 = best_abs, fp = corr_at(hi);
    const double denom = fm - 2.0 * f0 + fp;
    if (denom < 0.0) {
      double delta = 0.5 * (fm - fp) / denom;
      offset[d] = std::clamp(delta, -0.5, 0.5);
    }
  }
  // Final evaluation at a candidate shift by explicit subtraction in
  // spectral space: immune to the cancellation the norm-minus-correlation
  // form suffers when phi sits on or near the orbit of ref.
  auto eval_at = [&](const double y[3]) {
    std::vector<complexd> axis_phase[3];
    for (int d = 0; d < grid.N; ++d) {
      axis_phase[d].resize(grid.n);
      for (int i = 0; i < grid.n; ++i)
        axis_phase[d][i] = std::polar(1.0, grid.wavenumber(i) * y[d]);
    }
    auto phase_of = [&](std::size_t flat) {
      std::size_t rem = flat;
      complexd p = 1.0;
      for (int d = 0; d < grid.N; ++d) {
        const int id = static_cast<int>(rem / ix.stride[d]);
        rem %= ix.stride[d];
        p *= axis_phase[d][id];
      }
      return p;
    };
    complexd acc = 0.0;
    for (std::size_t flat = 0; flat < w.size(); ++flat)
      acc += w[flat] * phase_of(flat);
    const complexd rot =
        std::abs(acc) > 0.0 ? acc / std::abs(acc) : complexd(1.0);
    double d2 = 0.0;
    for (std::size_t flat = 0; flat < w.size(); ++flat) {
      const complexd v =
          ph[flat] - rot * rh[flat] * std::conj(phase_of(flat));
      d2 += (1.0 + k2[flat]) * abs2(v);
    }
    return std::sqrt(std::max(0.0, d2 * scale));
  };
  double y_lattice[3] = {0.0, 0.0, 0.0};
  double y_refined[3] = {0.0, 0.0, 0.0};
  bool off_lattice = false;
  for (int d = 0; d < grid.N; ++d) {
    y_lattice[d] = bi[d] * grid.h();
    y_refined[d] = (bi[d] + offset[d]) * grid.h();
    if (offset[d] != 0.0) off_lattice = true;
  }
  double dist = eval_at(y_lattice);
  if (off_lattice) dist = std::min(dist, eval_at(y_refined));
  return dist;
}

}  // namespace

double orbit_distance(const FieldState& phi, const FieldState& ref) {
  check_sized(phi);
  check_sized(ref);
  if (!same_grid(phi.grid, ref.grid))
    throw validation_error("orbit_distance: grid mismatch");
  if (std::holds_alternative<RadialGrid>(phi.grid))
    return orbit_distance_radial(phi, ref);
  return orbit_distance_box(phi, ref, std::get<BoxGrid>(phi.grid));
}

// --------------------------------------------------------- rearrangement ---

FieldState rearrange_radial(const FieldState& u) {
  check_sized(u);
  // Fast path: an already-nonincreasing radial modulus is a fixed point.
  if (std::holds_alternative<RadialGrid>(u.grid)) {
    bool decreasing = true;
    for (std::size_t i = 0; i + 1 < u.values.size() && decreasing; ++i)
      if (std::abs(u.values[i + 1]) > std::abs(u.values[i])) decreasing = false;
    if (decreasing) {
      FieldState out{u.grid, std::vector<complexd>(u.values.size())};
      for (std::size_t i = 0; i < u.values.size(); ++i)
        out.values[i] = std::abs(u.values[i]);
      return out;
    }
  }
  // Layer-cake data: (value, volume) samples sorted by decreasing value.
  std::vector<double> vol, val;
  int N = grid_dim(u.grid);
  if (const auto* rg = std::get_if<RadialGrid>(&u.grid)) {
    const RadialQuadrature quad = radial_quadrature(*rg);
    vol = quad.w;
    val.resize(u.values.size());
    for (std::size_t i = 0; i < u.values.size(); ++i)
      val[i] = std::abs(u.values[i]);
  } else {
    const auto& bg = std::get<BoxGrid>(u.grid);
    vol.assign(u.values.size(), box_cell(bg));
    val.resize(u.values.size());
    for (std::size_t i = 0; i < u.values.size(); ++i)
      val[i] = std::abs(u.values[i]);
  }
  std::vector<std::size_t> order(val.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return val[a] > val[b]; });
  // Piecewise-linear layer profile value(V) through cumulative-volume
  // midpoints; flat extension at both ends.
  std::vector<double> mid_v(order.size()), mid_val(order.size());
  double cum = 0.0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const double w = vol[order[k]];
    mid_v[k] = cum + 0.5 * w;
    mid_val[k] = val[order[k]];
    cum += w;
  }
  const double total_vol = cum;
  auto layer = [&](double V) {
    if (V <= mid_v.front()) return mid_val.front();
    if (V >= mid_v.back()) return mid_val.back();
    const auto it = std::upper_bound(mid_v.begin(), mid_v.end(), V);
    const std::size_t k = static_cast<std::size_t>(it - mid_v.begin());
    const double t = (V - mid_v[k - 1]) / (mid_v[k] - mid_v[k - 1]);
    return (1.0 - t) * mid_val[k - 1] + t * mid_val[k];
  };
  // Exact integral of the layer profile over [a, b] (trapezoid on the
  // piecewise-linear profile, zero beyond the total volume).
  auto layer_integral = [&](double a, double b) {
    a = std::min(a, total_vol);
    b = std::min(b, total_vol);
    if (b <= a) return 0.0;
    double acc = 0.0;
    double pos = a;
    while (pos < b) {
      const auto it = std::upper_bound(mid_v.begin(), mid_v.end(), pos);
      double seg_end = (it == mid_v.end()) ? b : std::min(*it, b);
      if (seg_end <= pos) seg_end = b;
      acc += 0.5 * (layer(pos) + layer(seg_end)) * (seg_end - pos);
      pos = seg_end;
    }
    return acc;
  };
  // Output grid: same radial grid, or a fresh one sized to hold the volume.
  RadialGrid out_grid;
  if (const auto* rg = std::get_if<RadialGrid>(&u.grid)) {
    out_grid = *rg;
  } else {
    out_grid.N = N;
    out_grid.rmax = std::pow(total_vol / ball_volume(N), 1.0 / N);
    out_grid.n = 4096;
  }
  const RadialQuadrature quad = radial_quadrature(out_grid);
  FieldState out{Grid{out_grid}, std::vector<complexd>(out_grid.nodes())};
  double edge_prev = 0.0;
  const double unit = ball_volume(N);
  for (std::size_t i = 0; i < out_grid.nodes(); ++i) {
    const double edge =
        (i < static_cast<std::size_t>(out_grid.n))
            ? unit * std::pow(quad.rf[i], N)
            : unit * std::pow(out_grid.rmax, N);
    double vi = layer_integral(edge_prev, edge) / quad.w[i];
    // Cell averages of a nonincreasing profile are nonincreasing; clamp the
    // quadrature roundoff so the result is a genuine rearrangement (and a
    // fixed point of this operation).
    if (i > 0) vi = std::min(vi, out.values[i - 1].real());
    out.values[i] = vi;
    edge_prev = edge;
  }
  return out;
}

// ------------------------------------------------------------- box extras ---

FieldState translate(const FieldState& u, const std::array<double, 3>& shift) {
  check_sized(u);
  const auto* bg = std::get_if<BoxGrid>(&u.grid);
  if (!bg) throw validation_error("translate: box grids only");
  std::vector<complexd> hat = u.values;
  fft_forward(*bg, hat);
  std::vector<complexd> axis_phase[3];
  for (int d = 0; d < bg->N; ++d) {
    axis_phase[d].resize(bg->n);
    for (int i = 0; i < bg->n; ++i)
      axis_phase[d][i] = std::polar(1.0, -bg->wavenumber(i) * shift[d]);
  }
  const BoxIndexer ix(*bg);
  const double scale = 1.0 / static_cast<double>(bg->total());
  for (std::size_t flat = 0; flat < hat.size(); ++flat) {
    std::size_t rem = flat;
    complexd p = scale;
    for (int d = 0; d < bg->N; ++d) {
      const int id = static_cast<int>(rem / ix.stride[d]);
      rem %= ix.stride[d];
      p *= axis_phase[d][id];
    }
    hat[flat] *= p;
  }
  fft_backward(*bg, hat);
  return FieldState{u.grid, std::move(hat)};
}

FieldState embed_radial_to_box(const FieldState& u, const BoxGrid& box) {
  check_sized(u);
  const auto* rg = std::get_if<RadialGrid>(&u.grid);
  if (!rg) throw validation_error("embed_radial_to_box: radial input required");
  validate(Grid{box});
  if (rg->N != box.N)
    throw validation_error("embed_radial_to_box: dimension mismatch");
  if (box.L / 2.0 * std::sqrt(static_cast<double>(box.N)) > rg->rmax) {
    // Corners sample beyond the profile; require negligible tail instead of
    // silently extending by zero.
    const double mass = radial_sums(*rg, u.values, 2.0, 2.0).mass;
    const double tail = radial_tail_mass(*rg, u.values, box.L / 2.0);
    if (tail > kTailFraction * mass)
      throw validation_error(
          "embed_radial_to_box: box corners reach past the radial grid and "
          "the profile tail there is not negligible");
  }
  std::vector<double> re(u.values.size()), im(u.values.size());
  for (std::size_t i = 0; i < u.values.size(); ++i) {
    re[i] = u.values[i].real();
    im[i] = u.values[i].imag();
  }
  const Spline sre = build_spline(re, rg->h());
  const Spline sim = build_spline(im, rg->h());
  if (box.N != 3)
    throw validation_error("embed_radial_to_box: implemented for N = 3");
  FieldState out{Grid{box}, std::vector<complexd>(box.total())};
  std::size_t pos = 0;
  auto coord = [&](int i) { return -box.L / 2 + box.h() * i; };
  for (int i0 = 0; i0 < box.n; ++i0) {
    const double x0 = coord(i0);
    for (int i1 = 0; i1 < box.n; ++i1) {
      const double x1 = coord(i1);
      const double partial = x0 * x0 + x1 * x1;
      for (int i2 = 0; i2 < box.n; ++i2, ++pos) {
        const double x2 = coord(i2);
        const double r = std::sqrt(partial + x2 * x2);
        out.values[pos] = complexd(sre.eval(r), sim.eval(r));
      }
    }
  }
  return out;
}

FieldState recenter(const FieldState& u) {
  check_sized(u);
  const auto* bg = std::get_if<BoxGrid>(&u.grid);
  if (!bg) return u;  // radial fields are centered by construction
  const BoxIndexer ix(*bg);
  // Circular mass centroid per axis.
  std::array<double, 3> shift = {0.0, 0.0, 0.0};
  for (int d = 0; d < bg->N; ++d) {
    complexd acc = 0.0;
    for (std::size_t flat = 0; flat < u.values.size(); ++flat) {
      const int id = static_cast<int>((flat / ix.stride[d]) %
                                      static_cast<std::size_t>(bg->n));
      const double angle = 2.0 * M_PI * id / bg->n;
      acc += abs2(u.values[flat]) * std::polar(1.0, angle);
    }
    if (std::abs(acc) == 0.0) continue;
    double angle = std::arg(acc);  // in (-pi, pi]
    // Node j corresponds to x = -L/2 + j h, angle 2 pi j / n; centroid at
    // the origin means angle pi (j = n/2).
    double j_mean = angle / (2.0 * M_PI) * bg->n;
    if (j_mean < 0) j_mean += bg->n;
    shift[d] = (j_mean - bg->n / 2.0) * bg->h();
  }
  return translate(u, {-shift[0], -shift[1], -shift[2]});
}

}  // namespace nlslab
