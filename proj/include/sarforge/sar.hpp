#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <optional>
#include <vector>

#include "sarforge/common.hpp"
#include "sarforge/phantom.hpp"
#include "sarforge/tissue.hpp"

namespace sarforge {

inline constexpr double kGram = 1e-3;  // kg

// SAR = sigma |E|^2 / (2 rho) per tissue cell, zero on background.
inline Grid2D<double> pointwise_sar(const Grid2D<std::complex<double>>& e_field,
                                    const TissueGrid& grid) {
  require_same_shape(e_field, grid.classes, "pointwise_sar");
  Grid2D<double> sar(grid.width, grid.height, 0.0);
  for (int iy = 0; iy < grid.height; ++iy)
    for (int ix = 0; ix < grid.width; ++ix) {
      if (!grid.is_tissue(ix, iy)) continue;
      const TissueProperties& p = grid.props_at(ix, iy);
      sar(ix, iy) = p.conductivity * std::norm(e_field(ix, iy)) / (2.0 * p.density);
    }
  return sar;
}

struct MassAveraged {
  Grid2D<double> averaged;
  Grid2D<std::uint8_t> partial;  // 1 where the region hit the raster edge short of target mass
};

// Mass-averaged local SAR by square-region growth. For each tissue cell the
// centered square grows one ring at a time until the tissue mass inside
// reaches target_mass; a square that would cross the raster edge stops the
// growth and marks the cell partial. Region sums run row-major over the
// final square -- this ordering is part of the definition so that
// independent implementations can match bitwise.
inline MassAveraged mass_average(const Grid2D<double>& pointwise, const TissueGrid& grid,
                                 double target_mass = kGram) {
  require_same_shape(pointwise, grid.classes, "mass_average");
  if (target_mass <= 0.0) throw SpecError("mass_average: target_mass must be positive");

  MassAveraged out;
  out.averaged = Grid2D<double>(grid.width, grid.height, 0.0);
  out.partial = Grid2D<std::uint8_t>(grid.width, grid.height, 0);

  auto region_mass = [&](int cx, int cy, int r) {
    double m = 0.0;
    for (int iy = cy - r; iy <= cy + r; ++iy)
      for (int ix = cx - r; ix <= cx + r; ++ix)
        if (grid.is_tissue(ix, iy)) m += grid.cell_mass(ix, iy);
    return m;
  };

  for (int cy = 0; cy < grid.height; ++cy) {
    for (int cx = 0; cx < grid.width; ++cx) {
      if (!grid.is_tissue(cx, cy)) continue;

      const int r_fit = std::min(std::min(cx, grid.width - 1 - cx),
                                 std::min(cy, grid.height - 1 - cy));
      int r = 0;
      double mass = region_mass(cx, cy, 0);
      while (mass < target_mass && r < r_fit) {
        ++r;
        mass = region_mass(cx, cy, r);
      }
      if (mass < target_mass) out.partial(cx, cy) = 1;

      if (r == 0) {
        // single-cell region: the average is the cell's own value, exactly
        out.averaged(cx, cy) = pointwise(cx, cy);
        continue;
      }
      double wsum = 0.0, msum = 0.0;
      for (int iy = cy - r; iy <= cy + r; ++iy)
        for (int ix = cx - r; ix <= cx + r; ++ix) {
          if (!grid.is_tissue(ix, iy)) continue;
          const double m = grid.cell_mass(ix, iy);
          wsum += pointwise(ix, iy) * m;
          msum += m;
        }
      out.averaged(cx, cy) = wsum / msum;  // msum > 0: the center cell has mass
    }
  }
  return out;
}

struct SarMap {
  Grid2D<double> pointwise;
  Grid2D<double> averaged_1g;
  Grid2D<std::uint8_t> mask;
  Grid2D<std::uint8_t> partial;
  double peak_local = 0.0;  // max of averaged_1g over the mask
  double global_avg = 0.0;  // mass-weighted mean of pointwise over the mask
};

inline double mass_weighted_global(const Grid2D<double>& pointwise, const TissueGrid& grid) {
  double wsum = 0.0, msum = 0.0;
  for (int iy = 0; iy < grid.height; ++iy)
    for (int ix = 0; ix < grid.width; ++ix) {
      if (!grid.is_tissue(ix, iy)) continue;
      const double m = grid.cell_mass(ix, iy);
      wsum += pointwise(ix, iy) * m;
      msum += m;
    }
  return msum > 0.0 ? wsum / msum : 0.0;
}

inline SarMap build_sar_map(const Grid2D<std::complex<double>>& e_field, const TissueGrid& grid,
                            double target_mass = kGram) {
  SarMap sar;
  sar.pointwise = pointwise_sar(e_field, grid);
  MassAveraged avg = mass_average(sar.pointwise, grid, target_mass);
  sar.averaged_1g = std::move(avg.averaged);
  sar.partial = std::move(avg.partial);
  sar.mask = rasterize_mask(grid);
  for (std::size_t i = 0; i < sar.mask.size(); ++i)
    if (sar.mask.data[i]) sar.peak_local = std::max(sar.peak_local, sar.averaged_1g.data[i]);
  sar.global_avg = mass_weighted_global(sar.pointwise, grid);
  return sar;
}

struct SarSummary {
  double peak_local = 0.0;
  double global_avg = 0.0;
  std::optional<double> ratio;  // absent when nothing is deposited
};

inline SarSummary summarize(const SarMap& sar) {
  bool any = false;
  for (auto m : sar.mask.data) any |= (m != 0);
  if (!any) throw SpecError("summarize: empty tissue mask");
  SarSummary s;
  s.peak_local = sar.peak_local;
  s.global_avg = sar.global_avg;
  if (sar.global_avg > 0.0) s.ratio = sar.peak_local / sar.global_avg;
  return s;
}

}  // namespace sarforge
