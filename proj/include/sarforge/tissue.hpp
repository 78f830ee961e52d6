#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "sarforge/common.hpp"

namespace sarforge {

enum TissueClass : std::uint8_t {
  kBackground = 0,
  kFat = 1,
  kMuscle = 2,
  kBone = 3,
  kCsf = 4,
};

struct TissueProperties {
  int class_id = 0;
  double conductivity = 0.0;      // S/m
  double density = 0.0;           // kg/m^3, 0 for background (no mass)
  double rel_permittivity = 1.0;  // dimensionless
};

inline constexpr const char* kTissueTableVersion = "v1";

enum class FieldTag : std::uint8_t { k3T = 0, k7T = 1 };

inline double field_frequency_mhz(FieldTag tag) { return tag == FieldTag::k3T ? 128.0 : 297.0; }

inline const char* field_name(FieldTag tag) { return tag == FieldTag::k3T ? "3T" : "7T"; }

// Representative tissue values at the two Larmor frequencies. Only muscle
// has a meaningful dispersion step between 128 and 297 MHz at this level of
// fidelity; the other classes are kept frequency-independent.
inline std::vector<TissueProperties> tissue_table(FieldTag tag) {
  const bool at_3t = (tag == FieldTag::k3T);
  return {
      {kBackground, 0.0, 0.0, 1.0},
      {kFat, 0.07, 911.0, 12.0},
      {kMuscle, at_3t ? 0.72 : 0.77, 1090.0, at_3t ? 63.0 : 58.0},
      {kBone, 0.06, 1908.0, 14.0},
      {kCsf, 2.14, 1007.0, 72.0},
  };
}

inline void validate_property_table(const std::vector<TissueProperties>& table) {
  if (table.empty()) throw SpecError("tissue table: empty");
  if (table[0].class_id != 0 || table[0].conductivity != 0.0 || table[0].density != 0.0)
    throw SpecError("tissue table: class 0 must be background (sigma=0, zero mass)");
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto& t = table[i];
    if (t.class_id != static_cast<int>(i))
      throw SpecError("tissue table: class_id " + std::to_string(t.class_id) +
                      " out of order at row " + std::to_string(i));
    if (t.conductivity < 0.0)
      throw SpecError("tissue table: negative conductivity for class " + std::to_string(i));
    if (i > 0 && t.density <= 0.0)
      throw SpecError("tissue table: density must be positive for class " + std::to_string(i));
    if (t.rel_permittivity < 1.0)
      throw SpecError("tissue table: rel_permittivity < 1 for class " + std::to_string(i));
  }
}

// Override table entries from key=value pairs of the form
// "<tissue>.<property>" with tissue in {fat, muscle, bone, csf} and property
// in {conductivity, density, rel_permittivity}.
inline void apply_tissue_overrides(std::vector<TissueProperties>& table,
                                   const std::map<std::string, std::string>& kv) {
  static const std::map<std::string, int> names = {
      {"fat", kFat}, {"muscle", kMuscle}, {"bone", kBone}, {"csf", kCsf}};
  for (const auto& [key, value] : kv) {
    if (key == "version") continue;
    const auto dot = key.find('.');
    if (dot == std::string::npos)
      throw SpecError("tissue override: malformed key '" + key + "'");
    const auto it = names.find(key.substr(0, dot));
    if (it == names.end()) throw SpecError("tissue override: unknown tissue '" + key + "'");
    TissueProperties& row = table.at(static_cast<std::size_t>(it->second));
    const std::string prop = key.substr(dot + 1);
    const double v = std::stod(value);
    if (prop == "conductivity")
      row.conductivity = v;
    else if (prop == "density")
      row.density = v;
    else if (prop == "rel_permittivity")
      row.rel_permittivity = v;
    else
      throw SpecError("tissue override: unknown property '" + prop + "'");
  }
  validate_property_table(table);
}

// Rasterized 2D body model: per-cell tissue class plus the property table
// the classes index into. Used both for phantoms in their own centered
// frame and for phantoms placed into the coil frame.
struct TissueGrid {
  int width = 0;
  int height = 0;
  double cell_size = 0.0;        // m per cell
  double slice_thickness = 0.0;  // m, out-of-plane extent for gram masses
  Grid2D<std::uint8_t> classes;
  std::vector<TissueProperties> property_table;

  const TissueProperties& props_at(int x, int y) const {
    return property_table[classes(x, y)];
  }
  bool is_tissue(int x, int y) const { return classes(x, y) != kBackground; }
  // mass of one cell, kg
  double cell_mass(int x, int y) const {
    return props_at(x, y).density * cell_size * cell_size * slice_thickness;
  }
  double extent_x() const { return width * cell_size; }
  double extent_y() const { return height * cell_size; }
  // cell-center coordinates relative to the grid center
  double cell_x(int ix) const { return (ix + 0.5) * cell_size - 0.5 * extent_x(); }
  double cell_y(int iy) const { return (iy + 0.5) * cell_size - 0.5 * extent_y(); }
};

inline void validate_grid(const TissueGrid& grid) {
  if (grid.width <= 0 || grid.height <= 0) throw SpecError("tissue grid: empty dimensions");
  if (grid.cell_size <= 0.0) throw SpecError("tissue grid: cell_size must be positive");
  if (grid.slice_thickness <= 0.0)
    throw SpecError("tissue grid: slice_thickness must be positive");
  validate_property_table(grid.property_table);
  bool any_tissue = false;
  for (std::uint8_t c : grid.classes.data) {
    if (c >= grid.property_table.size())
      throw SpecError("tissue grid: class id " + std::to_string(c) +
                      " outside property table");
    any_tissue |= (c != kBackground);
  }
  if (!any_tissue) throw SpecError("tissue grid: no tissue cells");
}

}  // namespace sarforge
