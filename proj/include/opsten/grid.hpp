#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace opsten {

// Interior extents plus a halo of width r on every face. Row-major storage,
// last axis contiguous. Padded coordinates run 0..N_a+2r-1; the interior is
// [r, r+N_a).
struct GridDims {
  int dim = 2;
  int order = 1;
  std::array<std::int64_t, 3> interior{0, 0, 0};

  std::int64_t padded(int axis) const { return interior[axis] + 2 * order; }
  std::int64_t padded_volume() const;
  std::int64_t interior_volume() const;
  std::int64_t flat(std::int64_t x, std::int64_t y) const { return x * padded(1) + y; }
  std::int64_t flat(std::int64_t x, std::int64_t y, std::int64_t z) const {
    return (x * padded(1) + y) * padded(2) + z;
  }
  std::int64_t flat_index(const std::array<std::int64_t, 3>& p) const {
    return dim == 2 ? flat(p[0], p[1]) : flat(p[0], p[1], p[2]);
  }
  bool operator==(const GridDims&) const = default;
};

GridDims make_dims(int dim, int order, const std::array<std::int64_t, 3>& interior);

struct Grid {
  GridDims dims;
  std::vector<double> values;  // padded_volume() doubles

  double at(std::int64_t x, std::int64_t y) const { return values[static_cast<std::size_t>(dims.flat(x, y))]; }
  double at(std::int64_t x, std::int64_t y, std::int64_t z) const {
    return values[static_cast<std::size_t>(dims.flat(x, y, z))];
  }
};

Grid make_grid(const GridDims& dims, double fill = 0.0);

// splitmix64: the documented PRNG behind every random fill. uniform_pm1 maps
// the top 53 bits to [-1, 1).
struct SplitMix64 {
  std::uint64_t state;
  explicit SplitMix64(std::uint64_t seed) : state(seed) {}
  std::uint64_t next() {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }
  double uniform_pm1() { return static_cast<double>(next() >> 11) * 0x1.0p-52 - 1.0; }
};

inline constexpr const char* kRngAlgorithm = "splitmix64";

// Fills every padded cell (halo included) in flat order.
void fill_random(Grid& grid, std::uint64_t seed);

// Binary grid file: magic "STG1", then u32 dim, u64 padded extents, raw f64
// payload, all little-endian.
void write_grid(const std::string& path, const Grid& grid);
Grid read_grid(const std::string& path, int expected_order);

}  // namespace opsten
