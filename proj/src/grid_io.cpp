#include "opsten/grid.hpp"

#include <cstring>
#include <fstream>

#include "opsten/errors.hpp"

namespace opsten {

std::int64_t GridDims::padded_volume() const {
  std::int64_t v = 1;
  for (int a = 0; a < dim; ++a) v *= padded(a);
  return v;
}

std::int64_t GridDims::interior_volume() const {
  std::int64_t v = 1;
  for (int a = 0; a < dim; ++a) v *= interior[a];
  return v;
}

GridDims make_dims(int dim, int order, const std::array<std::int64_t, 3>& interior) {
  if (dim != 2 && dim != 3) throw ConfigError("grid dim must be 2 or 3");
  if (order < 1) throw ConfigError("halo width must be >= 1");
  GridDims d;
  d.dim = dim;
  d.order = order;
  d.interior = interior;
  // Unused trailing axes are pinned to 1 so dims from different sources compare equal.
  for (int a = dim; a < 3; ++a) d.interior[static_cast<std::size_t>(a)] = 1;
  for (int a = 0; a < dim; ++a)
    if (interior[a] < 1) throw SizeError("interior extent must be >= 1 on axis " + std::to_string(a));
  return d;
}

Grid make_grid(const GridDims& dims, double fill) {
  Grid g;
  g.dims = dims;
  g.values.assign(static_cast<std::size_t>(dims.padded_volume()), fill);
  return g;
}

void fill_random(Grid& grid, std::uint64_t seed) {
  SplitMix64 rng(seed);
  for (double& v : grid.values) v = rng.uniform_pm1();
}

namespace {
constexpr char kMagic[4] = {'S', 'T', 'G', '1'};
}

void write_grid(const std::string& path, const Grid& grid) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.write(kMagic, 4);
  std::uint32_t dim = static_cast<std::uint32_t>(grid.dims.dim);
  out.write(reinterpret_cast<const char*>(&dim), sizeof dim);
  for (int a = 0; a < grid.dims.dim; ++a) {
    std::uint64_t e = static_cast<std::uint64_t>(grid.dims.padded(a));
    out.write(reinterpret_cast<const char*>(&e), sizeof e);
  }
  out.write(reinterpret_cast<const char*>(grid.values.data()),
            static_cast<std::streamsize>(grid.values.size() * sizeof(double)));
  if (!out) throw IoError("short write to " + path);
}

Grid read_grid(const std::string& path, int expected_order) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) throw IoError(path + ": not a grid file");
  std::uint32_t dim = 0;
  in.read(reinterpret_cast<char*>(&dim), sizeof dim);
  if (!in || (dim != 2 && dim != 3)) throw IoError(path + ": bad grid dimension");

  std::array<std::int64_t, 3> interior{0, 0, 0};
  for (std::uint32_t a = 0; a < dim; ++a) {
    std::uint64_t e = 0;
    in.read(reinterpret_cast<char*>(&e), sizeof e);
    std::int64_t inner = static_cast<std::int64_t>(e) - 2 * expected_order;
    if (!in || inner < 1)
      throw IoError(path + ": padded extent too small for halo width " + std::to_string(expected_order));
    interior[a] = inner;
  }

  Grid g = make_grid(make_dims(static_cast<int>(dim), expected_order, interior));
  in.read(reinterpret_cast<char*>(g.values.data()),
          static_cast<std::streamsize>(g.values.size() * sizeof(double)));
  if (!in) throw IoError(path + ": truncated payload");
  return g;
}

}  // namespace opsten
