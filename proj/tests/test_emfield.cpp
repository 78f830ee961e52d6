#include <catch2/catch_amalgamated.hpp>

#include <complex>

#include "sarforge/emfield.hpp"
#include "sarforge/phantom.hpp"

using namespace sarforge;
using Catch::Approx;

namespace {

// all-vacuum grid whose property table still carries the tissue classes
TissueGrid vacuum_grid(int n, double cell) {
  TissueGrid g;
  g.width = n;
  g.height = n;
  g.cell_size = cell;
  g.slice_thickness = 0.005;
  g.classes = Grid2D<std::uint8_t>(n, n, kBackground);
  g.classes(n / 2, n / 2) = kMuscle;  // validity needs one tissue cell
  g.property_table = tissue_table(FieldTag::k3T);
  return g;
}

CoilModel small_coil(int n, double cell, FieldTag tag = FieldTag::k3T) {
  // shield sized to the raster
  const double shield = 0.45 * n * cell;
  return make_coil(tag, 8, 0.75 * shield, shield);
}

double max_rel_diff(const std::vector<Complex>& a, const std::vector<Complex>& b) {
  double scale = 0.0;
  for (const auto& v : b) scale = std::max(scale, std::abs(v));
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d / scale;
}

}  // namespace

TEST_CASE("zero drive gives a zero right-hand side and a zero field", "[emfield]") {
  const int n = 24;
  const double cell = 0.4 / n;
  auto grid = vacuum_grid(n, cell);
  auto coil = small_coil(n, cell);
  for (auto& d : coil.drive) d = 0.0;
  const auto sys = assemble_system(grid, coil, {});
  for (const auto& v : sys.rhs) REQUIRE(v == Complex(0.0));
  const auto e = solve_field(sys);
  for (const auto& v : e.data) REQUIRE(std::abs(v) == 0.0);
}

TEST_CASE("vacuum system rows are the Laplacian plus k0^2 on the diagonal", "[emfield]") {
  const int n = 24;
  const double cell = 0.4 / n;
  const auto grid = vacuum_grid(n, cell);
  const auto coil = small_coil(n, cell);
  const auto sys = assemble_system(grid, coil, {});

  const double inv_h2 = 1.0 / (cell * cell);
  const double omega = 2.0 * kPi * coil.frequency_mhz * 1e6;
  const double k0_sq = omega * omega * kMu0 * kEps0;

  // five hand-assembled interior rows away from the muscle cell
  int checked = 0;
  for (int u = 0; u < sys.matrix.n && checked < 5; ++u) {
    const int ix = sys.cells[u] % n, iy = sys.cells[u] / n;
    if (std::abs(ix - n / 2) <= 1 && std::abs(iy - n / 2) <= 1) continue;
    bool interior = true;
    for (auto [dx, dy] : {std::pair{0, -1}, {-1, 0}, {1, 0}, {0, 1}})
      interior = interior && sys.unknown_index.in_bounds(ix + dx, iy + dy) &&
                 sys.unknown_index(ix + dx, iy + dy) >= 0;
    if (!interior) continue;
    REQUIRE(sys.matrix.row_ptr[u + 1] - sys.matrix.row_ptr[u] == 5);
    for (int k = sys.matrix.row_ptr[u]; k < sys.matrix.row_ptr[u + 1]; ++k) {
      const Complex v = sys.matrix.values[k];
      if (sys.matrix.col_idx[k] == u) {
        REQUIRE(v.real() == Approx(-4.0 * inv_h2 + k0_sq).epsilon(1e-14));
        REQUIRE(v.imag() == 0.0);
      } else {
        REQUIRE(v == Complex(inv_h2));
      }
    }
    ++checked;
  }
  REQUIRE(checked == 5);
}

TEST_CASE("conductive cell contributes -omega*mu0*sigma to the diagonal imaginary part",
          "[emfield]") {
  const int n = 24;
  const double cell = 0.4 / n;
  const auto grid = vacuum_grid(n, cell);
  const auto coil = small_coil(n, cell);
  const auto sys = assemble_system(grid, coil, {});

  const double omega = 2.0 * kPi * coil.frequency_mhz * 1e6;
  const double sigma = grid.property_table[kMuscle].conductivity;
  const int u = sys.unknown_index(n / 2, n / 2);
  REQUIRE(u >= 0);
  for (int k = sys.matrix.row_ptr[u]; k < sys.matrix.row_ptr[u + 1]; ++k)
    if (sys.matrix.col_idx[k] == u)
      REQUIRE(sys.matrix.values[k].imag() == Approx(-omega * kMu0 * sigma).epsilon(1e-14));
}

TEST_CASE("iterative solve matches the dense oracle on a 32x32 vacuum grid", "[emfield]") {
  const int n = 32;
  const double cell = 0.4 / n;
  const auto grid = vacuum_grid(n, cell);
  const auto coil = small_coil(n, cell);
  auto sys = assemble_system(grid, coil, {});

  // single unit source instead of the rung set
  sys.rhs.assign(sys.rhs.size(), Complex(0.0));
  sys.rhs[sys.unknown_index(n / 2 + 2, n / 2)] = Complex(1.0);

  SolveStats stats;
  const auto x_it = bicgstab(sys.matrix, sys.rhs, {1e-13, 20000}, &stats);
  const auto x_dn = dense_solve(sys.matrix, sys.rhs);
  REQUIRE(max_rel_diff(x_it, x_dn) <= 1e-8);
}

TEST_CASE("free-space falloff is monotone along a radial line", "[emfield]") {
  const int n = 48;
  const double cell = 1.2 / n;  // coarse, big domain
  auto grid = vacuum_grid(n, cell);
  const auto coil = small_coil(n, cell);
  auto sys = assemble_system(grid, coil, {});
  sys.rhs.assign(sys.rhs.size(), Complex(0.0));
  const int cxi = n / 2, cyi = n / 2;
  sys.rhs[sys.unknown_index(cxi, cyi)] = Complex(1.0);
  const auto e = field_to_grid(sys, bicgstab(sys.matrix, sys.rhs, {1e-10, 40000}));

  // stay away from the source cell and the shield boundary
  double prev = std::abs(e(cxi + 2, cyi));
  for (int d = 3; d <= n / 4; ++d) {
    const double cur = std::abs(e(cxi + d, cyi));
    REQUIRE(cur < prev);
    prev = cur;
  }
}

TEST_CASE("solver is linear in the source", "[emfield]") {
  const int n = 24;
  const double cell = 0.4 / n;
  const auto spec = default_phantom_spec(n, cell);
  const auto coil = small_coil(n, cell);
  PhantomSpec small = spec;
  small.outer_a_min = small.outer_a_max = 0.3 * coil.rung_radius;
  small.outer_b_min = small.outer_b_max = 0.35 * coil.rung_radius;
  small.fat_thickness_min = small.fat_thickness_max = 1.2 * cell;
  small.inclusion_r_min = 1.5 * cell;
  small.inclusion_r_max = 2.0 * cell;
  small.area_fraction_min = 0.0;
  small.area_fraction_max = 1.0;
  const auto grid = make_phantom(5, small);
  auto sys = assemble_system(grid, coil, {});

  const SolveOptions opts{1e-12, 40000};
  const auto base = bicgstab(sys.matrix, sys.rhs, opts);

  for (const Complex alpha : {Complex(2.0, 0.0), Complex(0.0, 1.0)}) {
    auto scaled = sys.rhs;
    for (auto& v : scaled) v *= alpha;
    const auto x = bicgstab(sys.matrix, scaled, opts);
    std::vector<Complex> expect(base.size());
    for (std::size_t i = 0; i < base.size(); ++i) expect[i] = alpha * base[i];
    REQUIRE(max_rel_diff(x, expect) < 1e-6);
  }
}

TEST_CASE("field is zero on and outside the shield", "[emfield]") {
  const int n = 32;
  const double cell = 0.4 / n;
  const auto grid = vacuum_grid(n, cell);
  const auto coil = small_coil(n, cell);
  const auto sys = assemble_system(grid, coil, {});
  const auto e = solve_field(sys);
  for (int iy = 0; iy < n; ++iy)
    for (int ix = 0; ix < n; ++ix) {
      const double x = sys.placed.cell_x(ix), y = sys.placed.cell_y(iy);
      if (x * x + y * y >= coil.shield_radius * coil.shield_radius)
        REQUIRE(std::abs(e(ix, iy)) == 0.0);
    }
}

TEST_CASE("non-convergence raises a solver error with the residual", "[emfield]") {
  const int n = 24;
  const double cell = 0.4 / n;
  const auto grid = vacuum_grid(n, cell);
  const auto coil = small_coil(n, cell);
  const auto sys = assemble_system(grid, coil, {});
  try {
    bicgstab(sys.matrix, sys.rhs, {1e-16, 3});
    FAIL("expected SolverError");
  } catch (const SolverError& e) {
    REQUIRE(e.relative_residual > 1e-16);
    REQUIRE(e.iterations <= 3);
  }
}

TEST_CASE("single line current follows the 1/d law", "[emfield]") {
  const Complex amp(1.0, 0.0);
  const auto [bx1, by1] = line_current_field(0.0, 0.0, amp, 0.03, 0.0);
  const auto [bx2, by2] = line_current_field(0.0, 0.0, amp, 0.06, 0.0);
  const double m1 = std::abs(Complex(bx1.real(), by1.real()));
  const double m2 = std::abs(Complex(bx2.real(), by2.real()));
  REQUIRE(m1 == Approx(2.0 * m2).epsilon(1e-12));
}

TEST_CASE("unloaded B1 magnitude has the coil's discrete rotational symmetry", "[emfield]") {
  const auto coil = make_coil(FieldTag::k7T);
  const double step = 2.0 * kPi / coil.rung_count;
  for (const auto& [x, y] : std::vector<std::pair<double, double>>{
           {0.03, 0.01}, {-0.05, 0.04}, {0.08, -0.06}}) {
    const double ref = unloaded_b1_at(coil, x, y);
    const double xr = x * std::cos(step) - y * std::sin(step);
    const double yr = x * std::sin(step) + y * std::cos(step);
    REQUIRE(unloaded_b1_at(coil, xr, yr) == Approx(ref).epsilon(1e-9));
  }
}

TEST_CASE("quadrature B1 is uniform to 5% within half the rung radius", "[emfield]") {
  const auto coil = make_coil(FieldTag::k3T);
  const int n = 64;
  const double cell = 2.0 * coil.shield_radius / (n - 4);
  const auto b1 = unloaded_b1(coil, n, n, cell);

  double lo = 1e300, hi = 0.0;
  for (int iy = 0; iy < n; ++iy)
    for (int ix = 0; ix < n; ++ix) {
      const double x = (ix + 0.5) * cell - 0.5 * n * cell;
      const double y = (iy + 0.5) * cell - 0.5 * n * cell;
      if (x * x + y * y > 0.25 * coil.rung_radius * coil.rung_radius) continue;
      lo = std::min(lo, b1(ix, iy));
      hi = std::max(hi, b1(ix, iy));
    }
  REQUIRE(hi > 0.0);
  REQUIRE((hi - lo) / hi <= 0.05);
}

TEST_CASE("unloaded B1 is normalized to 1 and zero outside the shield", "[emfield]") {
  const auto coil = make_coil(FieldTag::k7T);
  const int n = 48;
  const double cell = 2.0 * coil.shield_radius / (n - 4);
  const auto b1 = unloaded_b1(coil, n, n, cell);
  double max_v = 0.0;
  for (int iy = 0; iy < n; ++iy)
    for (int ix = 0; ix < n; ++ix) {
      const double x = (ix + 0.5) * cell - 0.5 * n * cell;
      const double y = (iy + 0.5) * cell - 0.5 * n * cell;
      if (x * x + y * y >= coil.shield_radius * coil.shield_radius)
        REQUIRE(b1(ix, iy) == 0.0);
      else
        REQUIRE(b1(ix, iy) >= 0.0);
      max_v = std::max(max_v, b1(ix, iy));
    }
  REQUIRE(max_v == 1.0);
}

TEST_CASE("unloaded B1 ignores the phantom entirely", "[emfield]") {
  const auto coil = make_coil(FieldTag::k3T);
  const int n = 32;
  const double cell = 2.0 * coil.shield_radius / (n - 4);
  // computed from the coil alone: nothing about tissue enters the signature
  const auto a = unloaded_b1(coil, n, n, cell);
  const auto b = unloaded_b1(coil, n, n, cell);
  REQUIRE(a.data == b.data);
}
