#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "sarforge/phantom.hpp"

using namespace sarforge;

namespace {

PhantomSpec test_spec() {
  // 64-cell raster sized so the default coil's shield fits
  const int n = 64;
  const double cell = 2.0 * 0.19 / (n - 4);
  return default_phantom_spec(n, cell);
}

}  // namespace

TEST_CASE("same seed and spec give bitwise-identical phantoms", "[phantom]") {
  const auto spec = test_spec();
  const TissueGrid a = make_phantom(7, spec);
  const TissueGrid b = make_phantom(7, spec);
  REQUIRE(a.classes.data == b.classes.data);
  REQUIRE(a.cell_size == b.cell_size);

  const TissueGrid c = make_phantom(8, spec);
  REQUIRE(a.classes.data != c.classes.data);
}

TEST_CASE("zero-inclusion spec yields exactly fat and muscle", "[phantom]") {
  auto spec = test_spec();
  spec.inclusions_min = 0;
  spec.inclusions_max = 0;
  const TissueGrid grid = make_phantom(3, spec);
  std::set<int> present;
  for (auto c : grid.classes.data) present.insert(c);
  REQUIRE(present == std::set<int>{kBackground, kFat, kMuscle});
}

TEST_CASE("oversized outer ellipse is rejected", "[phantom]") {
  auto spec = test_spec();
  spec.outer_b_max = 0.5 * spec.grid_height * spec.cell_size + 0.01;
  REQUIRE_THROWS_AS(make_phantom(1, spec), SpecError);
}

TEST_CASE("area fraction stays inside the spec bounds over a seed sweep", "[phantom]") {
  const auto spec = test_spec();
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const TissueGrid grid = make_phantom(seed, spec);
    // independent brute-force count over the raster
    std::size_t tissue = 0;
    for (auto c : grid.classes.data)
      if (c != kBackground) ++tissue;
    const double fraction = static_cast<double>(tissue) / grid.classes.size();
    CAPTURE(seed, fraction);
    REQUIRE(fraction >= spec.area_fraction_min);
    REQUIRE(fraction <= spec.area_fraction_max);
  }
}

TEST_CASE("property table closure holds for generated phantoms", "[phantom]") {
  const auto spec = test_spec();
  for (std::uint64_t seed = 100; seed < 120; ++seed) {
    const TissueGrid grid = make_phantom(seed, spec);
    int max_class = 0;
    for (auto c : grid.classes.data) max_class = std::max(max_class, static_cast<int>(c));
    REQUIRE(max_class < static_cast<int>(grid.property_table.size()));
  }
}

TEST_CASE("mask is 1 exactly on non-background cells", "[phantom]") {
  const auto spec = test_spec();
  const TissueGrid grid = make_phantom(7, spec);
  const auto mask = rasterize_mask(grid);

  std::size_t tissue = 0, mask_sum = 0;
  for (std::size_t i = 0; i < grid.classes.size(); ++i) {
    if (grid.classes.data[i] != kBackground) ++tissue;
    mask_sum += mask.data[i];
    REQUIRE(static_cast<int>(mask.data[i]) == (grid.classes.data[i] != kBackground ? 1 : 0));
  }
  REQUIRE(mask_sum == tissue);
}

TEST_CASE("single centered placement for unit counts", "[phantom]") {
  const auto spec = test_spec();
  const auto coil = make_coil(FieldTag::k3T);
  const auto placements =
      enumerate_placements(spec, coil, {-0.02, 0.02}, {-0.02, 0.02}, 1, 1);
  REQUIRE(placements.size() == 1);
  REQUIRE(placements[0].offset_x == 0.0);
  REQUIRE(placements[0].offset_y == 0.0);
}

TEST_CASE("14x16 sweep with no rejections gives 224 placements", "[phantom]") {
  const auto spec = test_spec();
  const auto coil = make_coil(FieldTag::k3T);
  const auto placements =
      enumerate_placements(spec, coil, {-0.015, 0.015}, {-0.0175, 0.0175}, 14, 16);
  REQUIRE(placements.size() == 224);
}

TEST_CASE("placement filter equals the per-placement brute force", "[phantom]") {
  const auto spec = test_spec();
  const auto coil = make_coil(FieldTag::k3T);
  // wide enough that corner placements collide with the coil
  const AxisRange rx{-0.06, 0.06}, ry{-0.06, 0.06};
  const auto placements = enumerate_placements(spec, coil, rx, ry, 5, 5);
  REQUIRE(placements.size() < 25);

  std::vector<Placement> expected;
  for (int iy = 0; iy < 5; ++iy)
    for (int ix = 0; ix < 5; ++ix) {
      Placement p{rx.min + (rx.max - rx.min) * ix / 4, ry.min + (ry.max - ry.min) * iy / 4, 0.0};
      if (placement_inside_coil(spec, coil, p)) expected.push_back(p);
    }
  REQUIRE(placements.size() == expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) {
    REQUIRE(placements[i].offset_x == expected[i].offset_x);
    REQUIRE(placements[i].offset_y == expected[i].offset_y);
  }
}

TEST_CASE("every returned placement keeps all tissue cells inside the coil", "[phantom]") {
  const auto spec = test_spec();
  const auto coil = make_coil(FieldTag::k3T);
  const auto placements =
      enumerate_placements(spec, coil, {-0.04, 0.04}, {-0.04, 0.04}, 4, 4);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const TissueGrid phantom = make_phantom(seed, spec);
    for (const auto& p : placements) {
      const TissueGrid placed = apply_placement(phantom, p);
      for (int iy = 0; iy < placed.height; ++iy)
        for (int ix = 0; ix < placed.width; ++ix) {
          if (!placed.is_tissue(ix, iy)) continue;
          const double x = placed.cell_x(ix), y = placed.cell_y(iy);
          REQUIRE(x * x + y * y < coil.rung_radius * coil.rung_radius);
        }
    }
  }
}

TEST_CASE("no valid placement raises an error", "[phantom]") {
  const auto spec = test_spec();
  const auto coil = make_coil(FieldTag::k3T);
  REQUIRE_THROWS_AS(enumerate_placements(spec, coil, {0.2, 0.3}, {0.2, 0.3}, 3, 3), SpecError);
}

TEST_CASE("centered placement reproduces the phantom raster", "[phantom]") {
  const auto spec = test_spec();
  const TissueGrid phantom = make_phantom(11, spec);
  const TissueGrid placed = apply_placement(phantom, Placement{0.0, 0.0, 0.0});
  REQUIRE(placed.classes.data == phantom.classes.data);
}
