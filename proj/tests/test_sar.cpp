#include <catch2/catch_amalgamated.hpp>

#include <complex>

#include "sarforge/sar.hpp"

using namespace sarforge;
using Catch::Approx;

namespace {

TissueGrid uniform_grid(int n, std::uint8_t cls, double cell = 0.005, double thick = 0.005) {
  TissueGrid g;
  g.width = n;
  g.height = n;
  g.cell_size = cell;
  g.slice_thickness = thick;
  g.classes = Grid2D<std::uint8_t>(n, n, cls);
  g.property_table = tissue_table(FieldTag::k3T);
  return g;
}

TissueGrid random_grid(int n, Rng& rng) {
  TissueGrid g = uniform_grid(n, kMuscle);
  for (auto& c : g.classes.data) {
    const int pick = rng.uniform_int(0, 4);
    c = static_cast<std::uint8_t>(pick);
  }
  g.classes(n / 2, n / 2) = kMuscle;  // keep at least one tissue cell
  return g;
}

Grid2D<double> random_sar(int n, Rng& rng, const TissueGrid& grid) {
  Grid2D<double> s(n, n, 0.0);
  for (int iy = 0; iy < n; ++iy)
    for (int ix = 0; ix < n; ++ix)
      if (grid.is_tissue(ix, iy)) s(ix, iy) = rng.uniform(0.0, 3.0);
  return s;
}

// Independent oracle: same normative rule, but membership decided by a
// Chebyshev-distance predicate over a whole-grid row-major scan, and the
// stop/fit logic re-derived from scratch.
struct OracleResult {
  double value;
  bool partial;
};

OracleResult oracle_mass_average(const Grid2D<double>& sar, const TissueGrid& grid, int cx,
                                 int cy, double target) {
  auto square_fits = [&](int r) {
    return cx - r >= 0 && cx + r < grid.width && cy - r >= 0 && cy + r < grid.height;
  };
  auto mass_at = [&](int r) {
    double m = 0.0;
    for (int iy = 0; iy < grid.height; ++iy)
      for (int ix = 0; ix < grid.width; ++ix)
        if (std::max(std::abs(ix - cx), std::abs(iy - cy)) <= r && grid.is_tissue(ix, iy))
          m += grid.props_at(ix, iy).density * grid.cell_size * grid.cell_size *
               grid.slice_thickness;
    return m;
  };

  int r = 0;
  bool partial = false;
  while (true) {
    if (mass_at(r) >= target) break;
    if (!square_fits(r + 1)) {
      partial = true;
      break;
    }
    ++r;
  }
  if (r == 0) return {sar(cx, cy), partial};
  double wsum = 0.0, msum = 0.0;
  for (int iy = 0; iy < grid.height; ++iy)
    for (int ix = 0; ix < grid.width; ++ix) {
      if (std::max(std::abs(ix - cx), std::abs(iy - cy)) > r) continue;
      if (!grid.is_tissue(ix, iy)) continue;
      const double m = grid.props_at(ix, iy).density * grid.cell_size * grid.cell_size *
                       grid.slice_thickness;
      wsum += sar(ix, iy) * m;
      msum += m;
    }
  return {wsum / msum, partial};
}

}  // namespace

TEST_CASE("pointwise SAR formula spot values", "[sar]") {
  // sigma=1, |E|=1, rho=1000 -> 5e-4 W/kg
  TissueGrid g = uniform_grid(4, kMuscle);
  g.property_table[kMuscle] = {kMuscle, 1.0, 1000.0, 50.0};
  Grid2D<std::complex<double>> e(4, 4, {1.0, 0.0});
  const auto sar = pointwise_sar(e, g);
  for (double v : sar.data) REQUIRE(v == Approx(5.0e-4).epsilon(1e-15));
}

TEST_CASE("zero conductivity means zero SAR everywhere", "[sar]") {
  TissueGrid g = uniform_grid(8, kMuscle);
  for (auto& row : g.property_table) row.conductivity = 0.0;
  Rng rng(3);
  Grid2D<std::complex<double>> e(8, 8);
  for (auto& v : e.data) v = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
  const auto sar = pointwise_sar(e, g);
  for (double v : sar.data) REQUIRE(v == 0.0);
}

TEST_CASE("pointwise SAR equals an independent elementwise evaluation", "[sar]") {
  Rng rng(17);
  const TissueGrid g = random_grid(9, rng);
  Grid2D<std::complex<double>> e(9, 9);
  for (auto& v : e.data) v = {rng.uniform(-2, 2), rng.uniform(-2, 2)};
  const auto sar = pointwise_sar(e, g);
  for (int iy = 0; iy < 9; ++iy)
    for (int ix = 0; ix < 9; ++ix) {
      const auto& p = g.property_table[g.classes(ix, iy)];
      const double re = e(ix, iy).real(), im = e(ix, iy).imag();
      const double expect =
          g.classes(ix, iy) == kBackground ? 0.0 : p.conductivity * (re * re + im * im) / (2.0 * p.density);
      REQUIRE(sar(ix, iy) == expect);
    }
}

TEST_CASE("uniform SAR averages to itself on interior cells", "[sar]") {
  const TissueGrid g = uniform_grid(15, kMuscle);
  Grid2D<double> sar(15, 15, 0.75);
  const auto avg = mass_average(sar, g, kGram);
  for (int iy = 0; iy < 15; ++iy)
    for (int ix = 0; ix < 15; ++ix)
      REQUIRE(avg.averaged(ix, iy) == Approx(0.75).margin(1e-12));
}

TEST_CASE("single hot cell averages to h/N over the final region", "[sar]") {
  const TissueGrid g = uniform_grid(15, kMuscle);
  Grid2D<double> sar(15, 15, 0.0);
  const double h = 2.0;
  sar(7, 7) = h;

  const double cell_mass = g.cell_mass(7, 7);
  // smallest ring count that reaches one gram
  int r = 0;
  while ((2 * r + 1) * (2 * r + 1) * cell_mass < kGram) ++r;
  const int n_cells = (2 * r + 1) * (2 * r + 1);

  const auto avg = mass_average(sar, g, kGram);
  REQUIRE(avg.averaged(7, 7) == Approx(h / n_cells).epsilon(1e-12));
}

TEST_CASE("square-growth averaging equals the brute-force oracle", "[sar]") {
  Rng rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    const TissueGrid g = random_grid(9, rng);
    const auto sar = random_sar(9, rng, g);
    const auto avg = mass_average(sar, g, kGram);
    for (int cy = 0; cy < 9; ++cy)
      for (int cx = 0; cx < 9; ++cx) {
        if (!g.is_tissue(cx, cy)) {
          REQUIRE(avg.averaged(cx, cy) == 0.0);
          continue;
        }
        const auto expect = oracle_mass_average(sar, g, cx, cy, kGram);
        REQUIRE(avg.averaged(cx, cy) == expect.value);
        REQUIRE((avg.partial(cx, cy) != 0) == expect.partial);
      }
  }
}

TEST_CASE("averaging is a convex combination of the region values", "[sar]") {
  Rng rng(7);
  const TissueGrid g = random_grid(11, rng);
  const auto sar = random_sar(11, rng, g);
  const auto avg = mass_average(sar, g, kGram);
  double lo = 1e300, hi = -1e300;
  for (int iy = 0; iy < 11; ++iy)
    for (int ix = 0; ix < 11; ++ix)
      if (g.is_tissue(ix, iy)) {
        lo = std::min(lo, sar(ix, iy));
        hi = std::max(hi, sar(ix, iy));
      }
  for (int iy = 0; iy < 11; ++iy)
    for (int ix = 0; ix < 11; ++ix)
      if (g.is_tissue(ix, iy)) {
        REQUIRE(avg.averaged(ix, iy) >= lo - 1e-12);
        REQUIRE(avg.averaged(ix, iy) <= hi + 1e-12);
      }
}

TEST_CASE("power-of-two scaling commutes with averaging bitwise", "[sar]") {
  Rng rng(23);
  const TissueGrid g = random_grid(10, rng);
  const auto sar = random_sar(10, rng, g);
  auto scaled = sar;
  for (auto& v : scaled.data) v *= 2.0;
  const auto a = mass_average(sar, g, kGram);
  const auto b = mass_average(scaled, g, kGram);
  for (std::size_t i = 0; i < a.averaged.size(); ++i)
    REQUIRE(b.averaged.data[i] == 2.0 * a.averaged.data[i]);
}

TEST_CASE("tiny target mass reduces averaging to the identity on tissue", "[sar]") {
  Rng rng(31);
  const TissueGrid g = random_grid(8, rng);
  const auto sar = random_sar(8, rng, g);
  const auto avg = mass_average(sar, g, 1e-12);
  for (int iy = 0; iy < 8; ++iy)
    for (int ix = 0; ix < 8; ++ix)
      if (g.is_tissue(ix, iy)) REQUIRE(avg.averaged(ix, iy) == sar(ix, iy));
}

TEST_CASE("summary ratio of a uniform map is 1", "[sar]") {
  const TissueGrid g = uniform_grid(12, kMuscle);
  Grid2D<std::complex<double>> e(12, 12, {0.5, 0.5});
  const auto sar = build_sar_map(e, g);
  const auto s = summarize(sar);
  REQUIRE(s.ratio.has_value());
  REQUIRE(*s.ratio == Approx(1.0).epsilon(1e-12));
  REQUIRE(sar.peak_local >= sar.global_avg * (1.0 - 1e-12));
}

TEST_CASE("all-zero SAR has an absent ratio", "[sar]") {
  TissueGrid g = uniform_grid(12, kMuscle);
  for (auto& row : g.property_table) row.conductivity = 0.0;
  Grid2D<std::complex<double>> e(12, 12, {1.0, 0.0});
  const auto sar = build_sar_map(e, g);
  const auto s = summarize(sar);
  REQUIRE_FALSE(s.ratio.has_value());
}

TEST_CASE("single-hotspot ratio matches the hand computation", "[sar]") {
  TissueGrid g = uniform_grid(15, kMuscle);
  Grid2D<double> pw(15, 15, 0.0);
  pw(7, 7) = 4.0;

  const double m = g.cell_mass(7, 7);
  const int n_tissue = 15 * 15;
  const double global = 4.0 * m / (n_tissue * m);
  int r = 0;
  while ((2 * r + 1) * (2 * r + 1) * m < kGram) ++r;
  const double peak = 4.0 / ((2 * r + 1) * (2 * r + 1));

  SarMap sar;
  sar.pointwise = pw;
  const auto avg = mass_average(pw, g, kGram);
  sar.averaged_1g = avg.averaged;
  sar.partial = avg.partial;
  sar.mask = rasterize_mask(g);
  for (std::size_t i = 0; i < sar.mask.size(); ++i)
    sar.peak_local = std::max(sar.peak_local, sar.averaged_1g.data[i]);
  sar.global_avg = mass_weighted_global(pw, g);

  const auto s = summarize(sar);
  REQUIRE(s.peak_local == Approx(peak).epsilon(1e-12));
  REQUIRE(s.global_avg == Approx(global).epsilon(1e-12));
  REQUIRE(*s.ratio == Approx(peak / global).epsilon(1e-12));
}
