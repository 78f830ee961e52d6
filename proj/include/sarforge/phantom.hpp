#pragma once

#include <algorithm>
#include <complex>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "sarforge/common.hpp"
#include "sarforge/tissue.hpp"

namespace sarforge {

// Shape parameters for the synthetic phantom family: an outer fat ellipse
// enclosing muscle, with a few elliptical inclusions (bone or CSF-like)
// fully inside the muscle. All lengths in meters.
struct PhantomSpec {
  int grid_width = 64;
  int grid_height = 64;
  double cell_size = 0.0;
  double slice_thickness = 0.005;

  double outer_a_min = 0.050, outer_a_max = 0.070;  // x semi-axis
  double outer_b_min = 0.055, outer_b_max = 0.075;  // y semi-axis
  double fat_thickness_min = 0.008, fat_thickness_max = 0.015;
  int inclusions_min = 1, inclusions_max = 4;
  double inclusion_r_min = 0.008, inclusion_r_max = 0.020;

  // admissible non-background area fraction of the raster, checked by tests
  double area_fraction_min = 0.0, area_fraction_max = 1.0;
};

inline PhantomSpec default_phantom_spec(int grid_n, double cell_size) {
  PhantomSpec spec;
  spec.grid_width = grid_n;
  spec.grid_height = grid_n;
  spec.cell_size = cell_size;
  const double grid_area = (grid_n * cell_size) * (grid_n * cell_size);
  spec.area_fraction_min = 0.85 * kPi * spec.outer_a_min * spec.outer_b_min / grid_area;
  spec.area_fraction_max = 1.15 * kPi * spec.outer_a_max * spec.outer_b_max / grid_area;
  return spec;
}

inline void validate_spec(const PhantomSpec& spec) {
  if (spec.grid_width <= 0 || spec.grid_height <= 0)
    throw SpecError("phantom spec: empty grid");
  if (spec.cell_size <= 0.0) throw SpecError("phantom spec: cell_size must be positive");
  if (spec.slice_thickness <= 0.0)
    throw SpecError("phantom spec: slice_thickness must be positive");
  if (spec.outer_a_min <= 0.0 || spec.outer_b_min <= 0.0 ||
      spec.outer_a_max < spec.outer_a_min || spec.outer_b_max < spec.outer_b_min)
    throw SpecError("phantom spec: bad outer ellipse ranges");
  if (spec.fat_thickness_min <= 0.0 || spec.fat_thickness_max < spec.fat_thickness_min)
    throw SpecError("phantom spec: bad fat thickness range");
  if (spec.fat_thickness_max >= spec.outer_a_min || spec.fat_thickness_max >= spec.outer_b_min)
    throw SpecError("phantom spec: fat ring would swallow the muscle core");
  if (spec.inclusions_min < 0 || spec.inclusions_max < spec.inclusions_min)
    throw SpecError("phantom spec: bad inclusion count range");
  if (spec.inclusion_r_min <= 0.0 || spec.inclusion_r_max < spec.inclusion_r_min)
    throw SpecError("phantom spec: bad inclusion radius range");
  if (spec.outer_a_max > 0.5 * spec.grid_width * spec.cell_size ||
      spec.outer_b_max > 0.5 * spec.grid_height * spec.cell_size)
    throw SpecError("phantom spec: outer ellipse larger than grid");
}

namespace detail {

struct EllipseShape {
  double cx, cy;      // center
  double a, b;        // semi-axes
  double cos_t, sin_t;  // rotation

  bool contains(double x, double y) const {
    const double dx = x - cx, dy = y - cy;
    const double u = (dx * cos_t + dy * sin_t) / a;
    const double v = (-dx * sin_t + dy * cos_t) / b;
    return u * u + v * v <= 1.0;
  }
};

}  // namespace detail

// Deterministic phantom synthesis: same (seed, spec) gives bitwise-identical
// grids. The property table attached depends on the field preset.
inline TissueGrid make_phantom(std::uint64_t seed, const PhantomSpec& spec,
                               FieldTag field = FieldTag::k3T) {
  validate_spec(spec);
  Rng rng(seed);

  const double a = rng.uniform(spec.outer_a_min, spec.outer_a_max);
  const double b = rng.uniform(spec.outer_b_min, spec.outer_b_max);
  const double fat = rng.uniform(spec.fat_thickness_min, spec.fat_thickness_max);

  detail::EllipseShape outer{0.0, 0.0, a, b, 1.0, 0.0};
  detail::EllipseShape inner{0.0, 0.0, a - fat, b - fat, 1.0, 0.0};

  const int n_incl = rng.uniform_int(spec.inclusions_min, spec.inclusions_max);
  std::vector<detail::EllipseShape> inclusions;
  std::vector<std::uint8_t> inclusion_class;
  for (int i = 0; i < n_incl; ++i) {
    const std::uint8_t cls = rng.uniform_int(0, 1) == 0 ? kBone : kCsf;
    const double ra = rng.uniform(spec.inclusion_r_min, spec.inclusion_r_max);
    const double rb = rng.uniform(spec.inclusion_r_min, spec.inclusion_r_max);
    const double angle = rng.uniform(0.0, kPi);
    const double rmax = std::max(ra, rb);
    const double fit_a = inner.a - rmax;
    const double fit_b = inner.b - rmax;
    // center drawn so the inclusion's bounding circle stays inside the
    // muscle core; a handful of rejection draws keeps the distribution flat
    bool placed = false;
    double ccx = 0.0, ccy = 0.0;
    for (int attempt = 0; attempt < 64 && fit_a > 0.0 && fit_b > 0.0; ++attempt) {
      ccx = rng.uniform(-fit_a, fit_a);
      ccy = rng.uniform(-fit_b, fit_b);
      if ((ccx / fit_a) * (ccx / fit_a) + (ccy / fit_b) * (ccy / fit_b) <= 1.0) {
        placed = true;
        break;
      }
    }
    if (!placed) continue;
    inclusions.push_back({ccx, ccy, ra, rb, std::cos(angle), std::sin(angle)});
    inclusion_class.push_back(cls);
  }

  TissueGrid grid;
  grid.width = spec.grid_width;
  grid.height = spec.grid_height;
  grid.cell_size = spec.cell_size;
  grid.slice_thickness = spec.slice_thickness;
  grid.classes = Grid2D<std::uint8_t>(grid.width, grid.height, kBackground);
  grid.property_table = tissue_table(field);

  for (int iy = 0; iy < grid.height; ++iy) {
    const double y = grid.cell_y(iy);
    for (int ix = 0; ix < grid.width; ++ix) {
      const double x = grid.cell_x(ix);
      if (!outer.contains(x, y)) continue;
      std::uint8_t cls = kFat;
      if (inner.contains(x, y)) {
        cls = kMuscle;
        // inclusions only overwrite muscle, so they never escape the body
        for (std::size_t k = 0; k < inclusions.size(); ++k)
          if (inclusions[k].contains(x, y)) cls = inclusion_class[k];
      }
      grid.classes(ix, iy) = cls;
    }
  }

  validate_grid(grid);
  return grid;
}

inline Grid2D<std::uint8_t> rasterize_mask(const TissueGrid& grid) {
  Grid2D<std::uint8_t> mask(grid.width, grid.height, 0);
  for (std::size_t i = 0; i < mask.size(); ++i)
    mask.data[i] = grid.classes.data[i] != kBackground ? 1 : 0;
  return mask;
}

// Birdcage-style coil: evenly spaced rungs on a circle, quadrature drive,
// perfectly conducting shield at shield_radius.
struct CoilModel {
  int rung_count = 16;
  double rung_radius = 0.15;    // m
  double shield_radius = 0.19;  // m
  double frequency_mhz = 128.0;
  std::vector<std::complex<double>> drive;  // unit amplitudes, phase 2*pi*k/n

  double rung_x(int k) const { return rung_radius * std::cos(2.0 * kPi * k / rung_count); }
  double rung_y(int k) const { return rung_radius * std::sin(2.0 * kPi * k / rung_count); }
};

inline std::vector<std::complex<double>> quadrature_drive(int rung_count) {
  std::vector<std::complex<double>> drive(rung_count);
  for (int k = 0; k < rung_count; ++k) {
    const double phase = 2.0 * kPi * k / rung_count;
    drive[k] = std::polar(1.0, phase);
  }
  return drive;
}

inline CoilModel make_coil(FieldTag field, int rung_count = 16, double rung_radius = 0.15,
                           double shield_radius = 0.19) {
  CoilModel coil;
  coil.rung_count = rung_count;
  coil.rung_radius = rung_radius;
  coil.shield_radius = shield_radius;
  coil.frequency_mhz = field_frequency_mhz(field);
  coil.drive = quadrature_drive(rung_count);
  return coil;
}

inline void validate_coil_geometry(const CoilModel& coil) {
  if (coil.rung_count < 3) throw SpecError("coil: needs at least 3 rungs");
  if (!(coil.shield_radius > coil.rung_radius && coil.rung_radius > 0.0))
    throw SpecError("coil: require shield_radius > rung_radius > 0");
  if (coil.frequency_mhz <= 0.0) throw SpecError("coil: frequency must be positive");
  if (static_cast<int>(coil.drive.size()) != coil.rung_count)
    throw SpecError("coil: drive size does not match rung count");
}

// full type invariant; scaled drives are still accepted by the solver so
// source linearity stays testable
inline void validate_coil(const CoilModel& coil) {
  validate_coil_geometry(coil);
  for (const auto& d : coil.drive)
    if (std::abs(std::abs(d) - 1.0) > 1e-12)
      throw SpecError("coil: drive amplitudes must have unit magnitude");
}

struct Placement {
  double offset_x = 0.0;  // m, phantom center relative to coil center
  double offset_y = 0.0;
  double rotation = 0.0;  // rad
};

// True when the spec's worst-case phantom bounding box, placed, lies
// strictly inside the rung circle. Every cell of any phantom from the same
// spec is then inside the coil as well.
inline bool placement_inside_coil(const PhantomSpec& spec, const CoilModel& coil,
                                  const Placement& p) {
  const double hx = spec.outer_a_max;
  const double hy = spec.outer_b_max;
  const double c = std::cos(p.rotation), s = std::sin(p.rotation);
  for (int sx = -1; sx <= 1; sx += 2) {
    for (int sy = -1; sy <= 1; sy += 2) {
      const double lx = sx * hx, ly = sy * hy;
      const double wx = p.offset_x + c * lx - s * ly;
      const double wy = p.offset_y + s * lx + c * ly;
      if (wx * wx + wy * wy >= coil.rung_radius * coil.rung_radius) return false;
    }
  }
  return true;
}

struct AxisRange {
  double min = 0.0;
  double max = 0.0;
};

// Cartesian sweep of phantom offsets inside the coil, row-major over
// (y, x), filtered to placements that keep the phantom inside the rung
// circle. Rotation is fixed at zero for sweeps.
inline std::vector<Placement> enumerate_placements(const PhantomSpec& spec,
                                                   const CoilModel& coil, AxisRange range_x,
                                                   AxisRange range_y, int count_x,
                                                   int count_y) {
  if (count_x < 1 || count_y < 1) throw SpecError("placements: counts must be >= 1");
  if (!(std::isfinite(range_x.min) && std::isfinite(range_x.max) &&
        std::isfinite(range_y.min) && std::isfinite(range_y.max)))
    throw SpecError("placements: ranges must be finite");
  validate_spec(spec);
  validate_coil(coil);

  auto offsets = [](AxisRange r, int n) {
    std::vector<double> v(n);
    if (n == 1) {
      v[0] = 0.5 * (r.min + r.max);
    } else {
      for (int i = 0; i < n; ++i) v[i] = r.min + (r.max - r.min) * i / (n - 1);
    }
    return v;
  };
  const auto xs = offsets(range_x, count_x);
  const auto ys = offsets(range_y, count_y);

  std::vector<Placement> placements;
  for (int iy = 0; iy < count_y; ++iy)
    for (int ix = 0; ix < count_x; ++ix) {
      Placement p{xs[ix], ys[iy], 0.0};
      if (placement_inside_coil(spec, coil, p)) placements.push_back(p);
    }
  if (placements.empty())
    throw SpecError("placements: no placement keeps the phantom inside the coil");
  return placements;
}

// Resample the phantom into the coil frame: the output grid has the same
// shape as the input, centered on the coil, with the phantom translated and
// rotated per the placement (nearest-neighbor lookup).
inline TissueGrid apply_placement(const TissueGrid& phantom, const Placement& p) {
  TissueGrid placed = phantom;
  placed.classes = Grid2D<std::uint8_t>(phantom.width, phantom.height, kBackground);
  const double c = std::cos(p.rotation), s = std::sin(p.rotation);
  for (int iy = 0; iy < phantom.height; ++iy) {
    const double wy = phantom.cell_y(iy);
    for (int ix = 0; ix < phantom.width; ++ix) {
      const double wx = phantom.cell_x(ix);
      // inverse transform into the phantom's local frame
      const double dx = wx - p.offset_x, dy = wy - p.offset_y;
      const double lx = c * dx + s * dy;
      const double ly = -s * dx + c * dy;
      const int px = static_cast<int>(std::floor(lx / phantom.cell_size + 0.5 * phantom.width));
      const int py = static_cast<int>(std::floor(ly / phantom.cell_size + 0.5 * phantom.height));
      if (phantom.classes.in_bounds(px, py)) placed.classes(ix, iy) = phantom.classes(px, py);
    }
  }
  return placed;
}

// key=value overrides for the phantom shape family; unknown keys rejected
inline PhantomSpec phantom_spec_from_config(PhantomSpec spec,
                                            const std::map<std::string, std::string>& kv) {
  for (const auto& [key, value] : kv) {
    const double v = std::stod(value);
    if (key == "outer_a_min") spec.outer_a_min = v;
    else if (key == "outer_a_max") spec.outer_a_max = v;
    else if (key == "outer_b_min") spec.outer_b_min = v;
    else if (key == "outer_b_max") spec.outer_b_max = v;
    else if (key == "fat_thickness_min") spec.fat_thickness_min = v;
    else if (key == "fat_thickness_max") spec.fat_thickness_max = v;
    else if (key == "inclusions_min") spec.inclusions_min = static_cast<int>(v);
    else if (key == "inclusions_max") spec.inclusions_max = static_cast<int>(v);
    else if (key == "inclusion_r_min") spec.inclusion_r_min = v;
    else if (key == "inclusion_r_max") spec.inclusion_r_max = v;
    else if (key == "area_fraction_min") spec.area_fraction_min = v;
    else if (key == "area_fraction_max") spec.area_fraction_max = v;
    else if (key == "slice_thickness") spec.slice_thickness = v;
    else throw SpecError("phantom config: unknown key '" + key + "'");
  }
  validate_spec(spec);
  return spec;
}

}  // namespace sarforge
