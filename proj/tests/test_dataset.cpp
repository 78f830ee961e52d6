#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "sarforge/dataset.hpp"

using namespace sarforge;

namespace {

Sample random_sample(Rng& rng, int h, int w) {
  Sample s;
  s.height = h;
  s.width = w;
  s.input.resize(static_cast<std::size_t>(h) * w);
  s.target.resize(s.input.size());
  for (auto& v : s.input) v = static_cast<float>(rng.uniform());
  for (auto& v : s.target) v = static_cast<float>(rng.uniform());
  s.meta = {rng.uniform(-0.05, 0.05), rng.uniform(-0.05, 0.05), rng.next_u64(),
            rng.uniform(0.1, 10.0), FieldTag::k7T};
  return s;
}

std::filesystem::path temp_file(const char* name) {
  return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("split reproduces the reference counts", "[dataset]") {
  const auto idx = split(22848, {}, 42);
  REQUIRE(idx.train.size() == 16320);
  REQUIRE(idx.val.size() == 4080);
  REQUIRE(idx.test.size() == 2448);
}

TEST_CASE("split floor arithmetic on tiny n", "[dataset]") {
  const auto idx = split(7, {}, 1);
  REQUIRE(idx.train.size() == 5);
  REQUIRE(idx.val.size() == 1);
  REQUIRE(idx.test.size() == 1);
}

TEST_CASE("split is deterministic and a disjoint cover", "[dataset]") {
  const auto a = split(501, {}, 7);
  const auto b = split(501, {}, 7);
  REQUIRE(a.train == b.train);
  REQUIRE(a.val == b.val);
  REQUIRE(a.test == b.test);

  std::vector<int> all;
  all.insert(all.end(), a.train.begin(), a.train.end());
  all.insert(all.end(), a.val.begin(), a.val.end());
  all.insert(all.end(), a.test.begin(), a.test.end());
  std::sort(all.begin(), all.end());
  for (int i = 0; i < 501; ++i) REQUIRE(all[static_cast<std::size_t>(i)] == i);

  const auto c = split(501, {}, 8);
  REQUIRE(a.train != c.train);
}

TEST_CASE("split train fraction bound", "[dataset]") {
  for (int n : {10, 100, 247, 1000}) {
    const auto idx = split(n, {}, 3);
    const double frac = static_cast<double>(idx.train.size()) / n;
    REQUIRE(frac <= 5.0 / 7.0 + 1e-12);
    REQUIRE(frac >= 5.0 / 7.0 - 1.0 / n);
  }
}

TEST_CASE("too-small split is rejected", "[dataset]") {
  REQUIRE_THROWS_AS(split(2, {}, 1), SpecError);
}

TEST_CASE("dataset round-trips bitwise", "[dataset]") {
  Rng rng(5);
  Dataset ds;
  ds.height = 6;
  ds.width = 5;
  for (int i = 0; i < 3; ++i) ds.samples.push_back(random_sample(rng, 6, 5));

  const auto path = temp_file("sarforge_roundtrip.sard");
  write_dataset(ds, path.string());
  const Dataset back = read_dataset(path.string());

  REQUIRE(back.height == ds.height);
  REQUIRE(back.width == ds.width);
  REQUIRE(back.samples.size() == ds.samples.size());
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    const auto& a = ds.samples[i];
    const auto& b = back.samples[i];
    REQUIRE(a.input == b.input);
    REQUIRE(a.target == b.target);
    REQUIRE(a.meta.offset_x == b.meta.offset_x);
    REQUIRE(a.meta.offset_y == b.meta.offset_y);
    REQUIRE(a.meta.phantom_seed == b.meta.phantom_seed);
    REQUIRE(a.meta.norm_factor == b.meta.norm_factor);
    REQUIRE(a.meta.field_tag == b.meta.field_tag);
  }
  std::filesystem::remove(path);
}

TEST_CASE("corrupted header magic is rejected", "[dataset]") {
  Rng rng(6);
  Dataset ds;
  ds.height = 4;
  ds.width = 4;
  ds.samples.push_back(random_sample(rng, 4, 4));
  const auto path = temp_file("sarforge_corrupt.sard");
  write_dataset(ds, path.string());

  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(1);
    f.put('x');
  }
  REQUIRE_THROWS_AS(read_dataset(path.string()), FormatError);
  std::filesystem::remove(path);
}

TEST_CASE("truncated payload reports the byte offset", "[dataset]") {
  Rng rng(7);
  Dataset ds;
  ds.height = 4;
  ds.width = 4;
  ds.samples.push_back(random_sample(rng, 4, 4));
  ds.samples.push_back(random_sample(rng, 4, 4));
  const auto path = temp_file("sarforge_trunc.sard");
  write_dataset(ds, path.string());

  const auto full = std::filesystem::file_size(path);
  std::filesystem::resize_file(path, full - 10);
  try {
    read_dataset(path.string());
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    REQUIRE(e.byte_offset > 0);
    REQUIRE(e.byte_offset <= full);
  }
  std::filesystem::remove(path);
}

TEST_CASE("declared count shorter than the payload is rejected", "[dataset]") {
  Rng rng(8);
  Dataset ds;
  ds.height = 4;
  ds.width = 4;
  ds.samples.push_back(random_sample(rng, 4, 4));
  ds.samples.push_back(random_sample(rng, 4, 4));
  const auto path = temp_file("sarforge_count.sard");
  write_dataset(ds, path.string());

  {
    // drop sample_count from 2 to 1; the second sample becomes trailing data
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(6);
    const char one[4] = {1, 0, 0, 0};
    f.write(one, 4);
  }
  REQUIRE_THROWS_AS(read_dataset(path.string()), FormatError);
  std::filesystem::remove(path);
}
