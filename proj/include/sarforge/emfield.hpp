#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include "sarforge/common.hpp"
#include "sarforge/linsolve.hpp"
#include "sarforge/phantom.hpp"
#include "sarforge/tissue.hpp"

namespace sarforge {

inline constexpr double kMu0 = 4.0 * kPi * 1e-7;       // H/m
inline constexpr double kEps0 = 8.8541878128e-12;      // F/m

// 2D TM frequency-domain problem on the coil-frame grid:
//   lap(E) + k^2 E = -j w mu0 J,   k^2 = w^2 mu0 eps0 epsr - j w mu0 sigma
// Unknowns are the cells strictly inside the shield circle; the shield and
// everything beyond is a Dirichlet zero.
struct HelmholtzSystem {
  SparseComplexMatrix matrix;
  std::vector<Complex> rhs;
  Grid2D<int> unknown_index;  // -1 where E is pinned to zero
  std::vector<int> cells;     // unknown -> flat cell index
  TissueGrid placed;          // phantom resampled into the coil frame
  double omega = 0.0;         // rad/s
};

inline HelmholtzSystem assemble_system(const TissueGrid& phantom, const CoilModel& coil,
                                       const Placement& placement) {
  validate_grid(phantom);
  validate_coil_geometry(coil);

  const int w = phantom.width, h = phantom.height;
  const double cell = phantom.cell_size;
  if (2.0 * coil.shield_radius / cell < 2.0)
    throw SpecError("assemble: degenerate grid, fewer than 2 cells across the shield");
  if (coil.shield_radius > 0.5 * w * cell || coil.shield_radius > 0.5 * h * cell)
    throw SpecError("assemble: degenerate grid, shield circle does not fit the raster");

  HelmholtzSystem sys;
  sys.placed = apply_placement(phantom, placement);
  sys.omega = 2.0 * kPi * coil.frequency_mhz * 1e6;

  sys.unknown_index = Grid2D<int>(w, h, -1);
  const double shield_sq = coil.shield_radius * coil.shield_radius;
  for (int iy = 0; iy < h; ++iy)
    for (int ix = 0; ix < w; ++ix) {
      const double x = sys.placed.cell_x(ix), y = sys.placed.cell_y(iy);
      if (x * x + y * y < shield_sq) {
        sys.unknown_index(ix, iy) = static_cast<int>(sys.cells.size());
        sys.cells.push_back(iy * w + ix);
      }
    }

  const int n = static_cast<int>(sys.cells.size());
  sys.matrix.n = n;
  sys.matrix.row_ptr.assign(n + 1, 0);
  sys.rhs.assign(n, Complex(0.0));

  const double inv_h2 = 1.0 / (cell * cell);
  const double omega = sys.omega;

  for (int u = 0; u < n; ++u) {
    const int ix = sys.cells[u] % w;
    const int iy = sys.cells[u] / w;
    const TissueProperties& props = sys.placed.props_at(ix, iy);
    const Complex k_sq(omega * omega * kMu0 * kEps0 * props.rel_permittivity,
                       -omega * kMu0 * props.conductivity);

    // neighbors in ascending flat-index order keeps CSR columns sorted
    const int nbr[4][2] = {{ix, iy - 1}, {ix - 1, iy}, {ix + 1, iy}, {ix, iy + 1}};
    auto push = [&](int col, Complex val) {
      sys.matrix.col_idx.push_back(col);
      sys.matrix.values.push_back(val);
    };
    for (int t = 0; t < 2; ++t)
      if (sys.unknown_index.in_bounds(nbr[t][0], nbr[t][1]) &&
          sys.unknown_index(nbr[t][0], nbr[t][1]) >= 0)
        push(sys.unknown_index(nbr[t][0], nbr[t][1]), Complex(inv_h2));
    push(u, Complex(-4.0 * inv_h2) + k_sq);
    for (int t = 2; t < 4; ++t)
      if (sys.unknown_index.in_bounds(nbr[t][0], nbr[t][1]) &&
          sys.unknown_index(nbr[t][0], nbr[t][1]) >= 0)
        push(sys.unknown_index(nbr[t][0], nbr[t][1]), Complex(inv_h2));
    sys.matrix.row_ptr[u + 1] = static_cast<int>(sys.matrix.col_idx.size());
  }

  // rungs as point current sources, one cell each
  for (int k = 0; k < coil.rung_count; ++k) {
    const double rx = coil.rung_x(k), ry = coil.rung_y(k);
    const int ix = static_cast<int>(std::floor(rx / cell + 0.5 * w));
    const int iy = static_cast<int>(std::floor(ry / cell + 0.5 * h));
    if (!sys.unknown_index.in_bounds(ix, iy) || sys.unknown_index(ix, iy) < 0)
      throw SpecError("assemble: rung cell falls outside the shield interior");
    const Complex j_term = Complex(0.0, -1.0) * omega * kMu0 * coil.drive[k] * inv_h2;
    sys.rhs[sys.unknown_index(ix, iy)] += j_term;
  }

  return sys;
}

// Scatter the unknown vector back onto the grid; Dirichlet cells stay zero.
inline Grid2D<Complex> field_to_grid(const HelmholtzSystem& sys,
                                     const std::vector<Complex>& x) {
  Grid2D<Complex> e(sys.placed.width, sys.placed.height, Complex(0.0));
  for (std::size_t u = 0; u < sys.cells.size(); ++u) e.data[sys.cells[u]] = x[u];
  return e;
}

inline Grid2D<Complex> solve_field(const HelmholtzSystem& sys, const SolveOptions& opts = {},
                                   SolveStats* stats = nullptr) {
  const auto x = bicgstab(sys.matrix, sys.rhs, opts, stats);
  for (const auto& v : x)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
      throw SolverError("solve_field: non-finite solution", 0.0, stats ? stats->iterations : 0);
  return field_to_grid(sys, x);
}

// Magnetostatic field of one out-of-plane line current at (px, py) with
// complex amplitude `amp`, evaluated at (x, y): azimuthal 1/d falloff.
inline std::pair<Complex, Complex> line_current_field(double px, double py, Complex amp,
                                                      double x, double y) {
  const double dx = x - px, dy = y - py;
  const double d_sq = dx * dx + dy * dy;
  const double scale = kMu0 / (2.0 * kPi) / d_sq;
  return {amp * (-dy * scale), amp * (dx * scale)};
}

// Circularly polarized excitation magnitude |Bx + i By|/2 of the quadrature
// rung set, before normalization. Under the e^{+jwt} phasor convention used
// throughout, the component co-rotating with the drive is (Bx - i By); the
// anti-rotating combination cancels at the coil center.
inline double unloaded_b1_at(const CoilModel& coil, double x, double y) {
  Complex bx(0.0), by(0.0);
  for (int k = 0; k < coil.rung_count; ++k) {
    const auto [fx, fy] = line_current_field(coil.rung_x(k), coil.rung_y(k), coil.drive[k], x, y);
    bx += fx;
    by += fy;
  }
  return 0.5 * std::abs(bx - Complex(0.0, 1.0) * by);
}

// Unloaded B1 magnitude raster in the coil frame: zero on/outside the
// shield, rung-singular cells patched from the nearest regular cell, then
// normalized to a max of 1 over the interior.
inline Grid2D<double> unloaded_b1(const CoilModel& coil, int width, int height,
                                  double cell_size) {
  validate_coil_geometry(coil);
  Grid2D<double> b1(width, height, 0.0);
  Grid2D<std::uint8_t> singular(width, height, 0);
  const double shield_sq = coil.shield_radius * coil.shield_radius;
  const double singular_sq = 0.25 * cell_size * cell_size;

  auto cx = [&](int ix) { return (ix + 0.5) * cell_size - 0.5 * width * cell_size; };
  auto cy = [&](int iy) { return (iy + 0.5) * cell_size - 0.5 * height * cell_size; };

  for (int iy = 0; iy < height; ++iy)
    for (int ix = 0; ix < width; ++ix) {
      const double x = cx(ix), y = cy(iy);
      if (x * x + y * y >= shield_sq) continue;
      bool near_rung = false;
      for (int k = 0; k < coil.rung_count && !near_rung; ++k) {
        const double dx = x - coil.rung_x(k), dy = y - coil.rung_y(k);
        near_rung = dx * dx + dy * dy < singular_sq;
      }
      if (near_rung)
        singular(ix, iy) = 1;
      else
        b1(ix, iy) = unloaded_b1_at(coil, x, y);
    }

  // patch singular cells from the nearest regular in-shield cell
  for (int iy = 0; iy < height; ++iy)
    for (int ix = 0; ix < width; ++ix) {
      if (!singular(ix, iy)) continue;
      double best_d = 0.0;
      double best_v = 0.0;
      bool found = false;
      for (int r = 1; r < std::max(width, height) && !found; ++r) {
        for (int jy = std::max(0, iy - r); jy <= std::min(height - 1, iy + r); ++jy)
          for (int jx = std::max(0, ix - r); jx <= std::min(width - 1, ix + r); ++jx) {
            if (singular(jx, jy) || b1(jx, jy) == 0.0) continue;
            const double d = (jx - ix) * double(jx - ix) + (jy - iy) * double(jy - iy);
            if (!found || d < best_d) {
              best_d = d;
              best_v = b1(jx, jy);
              found = true;
            }
          }
      }
      b1(ix, iy) = best_v;
    }

  double max_v = 0.0;
  for (double v : b1.data) max_v = std::max(max_v, v);
  if (max_v > 0.0)
    for (double& v : b1.data) v /= max_v;
  return b1;
}

// One coil/phantom placement solved end to end.
struct FieldSolution {
  Grid2D<Complex> e_field;
  Grid2D<double> b1_unloaded;
  double frequency_mhz = 0.0;
  Placement placement;
};

struct FieldComputation {
  FieldSolution solution;
  TissueGrid placed;
  SolveStats stats;
};

inline FieldComputation compute_field(const TissueGrid& phantom, const CoilModel& coil,
                                      const Placement& placement,
                                      const SolveOptions& opts = {},
                                      const Grid2D<double>* b1_cached = nullptr) {
  HelmholtzSystem sys = assemble_system(phantom, coil, placement);
  FieldComputation out;
  out.solution.e_field = solve_field(sys, opts, &out.stats);
  out.solution.b1_unloaded =
      b1_cached ? *b1_cached : unloaded_b1(coil, phantom.width, phantom.height, phantom.cell_size);
  out.solution.frequency_mhz = coil.frequency_mhz;
  out.solution.placement = placement;
  out.placed = std::move(sys.placed);
  return out;
}

}  // namespace sarforge
