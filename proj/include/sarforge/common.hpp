#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace sarforge {

inline constexpr double kPi = 3.14159265358979323846;

// Invalid specs, flag values, preconditions.
struct SpecError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Tensor/raster dimension mismatches.
struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed or truncated binary files; carries the byte offset of detection.
struct FormatError : std::runtime_error {
  FormatError(const std::string& what, std::uint64_t offset)
      : std::runtime_error(what + " (byte offset " + std::to_string(offset) + ")"),
        byte_offset(offset) {}
  std::uint64_t byte_offset;
};

// Iterative solver gave up; carries the last relative residual.
struct SolverError : std::runtime_error {
  SolverError(const std::string& what, double residual, int iterations)
      : std::runtime_error(what + " (relative residual " + std::to_string(residual) +
                           " after " + std::to_string(iterations) + " iterations)"),
        relative_residual(residual),
        iterations(iterations) {}
  double relative_residual;
  int iterations;
};

struct MetricError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Non-finite training loss; records where it happened.
struct DivergenceError : std::runtime_error {
  DivergenceError(int epoch, int batch)
      : std::runtime_error("training diverged (non-finite loss) at epoch " +
                           std::to_string(epoch) + ", batch " + std::to_string(batch)),
        epoch(epoch),
        batch(batch) {}
  int epoch;
  int batch;
};

template <typename T>
struct Grid2D {
  int width = 0;
  int height = 0;
  std::vector<T> data;  // row-major, index = y*width + x

  Grid2D() = default;
  Grid2D(int w, int h, T fill = T{})
      : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

  T& operator()(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
  const T& operator()(int x, int y) const {
    return data[static_cast<std::size_t>(y) * width + x];
  }
  bool in_bounds(int x, int y) const { return x >= 0 && x < width && y >= 0 && y < height; }
  std::size_t size() const { return data.size(); }
  template <typename U>
  bool same_shape(const Grid2D<U>& other) const {
    return width == other.width && height == other.height;
  }
};

template <typename T>
std::string shape_string(const Grid2D<T>& g) {
  return std::to_string(g.width) + "x" + std::to_string(g.height);
}

template <typename A, typename B>
void require_same_shape(const Grid2D<A>& a, const Grid2D<B>& b, const char* where) {
  if (!a.same_shape(b))
    throw ShapeError(std::string(where) + ": shape mismatch " + shape_string(a) + " vs " +
                     shape_string(b));
}

// Deterministic random stream. mt19937_64 output is pinned by the standard;
// the distribution transforms are done by hand because std::*_distribution
// is implementation-defined and would break bitwise reproducibility across
// standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // [0, 1), 53-bit resolution
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // inclusive bounds
  int uniform_int(int lo, int hi) {
    return lo + static_cast<int>(engine_() % static_cast<std::uint64_t>(hi - lo + 1));
  }

  // Box-Muller, spare value discarded so consumption is one pair per call
  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace sarforge
