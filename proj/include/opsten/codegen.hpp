#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "opsten/cover.hpp"
#include "opsten/grid.hpp"
#include "opsten/stencil.hpp"
#include "opsten/vm.hpp"

namespace opsten {

// Output tiling factors. 2D kernels unroll uj subblocks along the columns; 3D
// kernels unroll ui planes and uk column blocks. The axis that outer-product
// rows scatter over implicitly (rows in 2D, the middle axis in 3D) is never
// unrolled.
struct UnrollConfig {
  int uj = 1;
  int ui = 1;
  int uk = 1;
};

struct TileGroup {
  std::array<std::int64_t, 3> base{0, 0, 0};  // interior coordinates of the first output
};

struct TilePlan {
  std::vector<TileGroup> groups;
  std::array<std::int64_t, 3> group_counts{1, 1, 1};
};

// Splits the interior into groups of accumulators. Throws SizeError naming the
// offending axis when an extent is not divisible by its tile footprint.
TilePlan plan_tiles(const GridDims& dims, int lanes, const UnrollConfig& unroll);

struct MemoryLayout {
  std::int64_t a_base = 0;
  std::int64_t b_base = 0;
  std::int64_t cv_base = 0;
  std::int64_t total = 0;
};

MemoryLayout plan_memory(const GridDims& dims, const LineCover& cover, int lanes);

// Closed-form expectations derived by loop counting; no simulation behind
// these numbers. Tests pin them against executed statistics.
struct PredictedStats {
  std::uint64_t fmopa_per_subblock = 0;
  std::uint64_t subblocks = 0;
  std::uint64_t fmopa_total = 0;
  std::uint64_t a_row_loads_per_plane = 0;  // input rows touched per plane per group
  std::uint64_t cv_loads_per_group = 0;     // coefficient windows fetched per group
  std::uint64_t cv_loads_total = 0;
  std::uint64_t vload_total = 0;            // every vector load, all regions
  std::uint64_t stores_total = 0;
  // Outer products per output vector per coefficient line, as an exact
  // rational: (2r+n)/n for a full line.
  std::uint64_t per_vector_num = 0;
  std::uint64_t per_vector_den = 0;
};

PredictedStats predict_stats(const StencilSpec& spec, const LineCover& cover,
                             const MachineConfig& cfg, const UnrollConfig& unroll,
                             const GridDims& dims);

// Static register accounting for the generator's fixed slot assignment.
// Throws BudgetError naming the binding resource.
void validate_budget(const StencilSpec& spec, const LineCover& cover, const MachineConfig& cfg,
                     const UnrollConfig& unroll);

struct CodegenResult {
  Program program;
  std::vector<double> cv_values;  // contents of the coefficient buffer
  MemoryLayout layout;
};

// Lowers the covered stencil to one straight-line program over the memory
// image [A | B | coefficient buffer]. Requires 2r < n and axis-parallel lines.
CodegenResult generate_program(const StencilSpec& spec, const LineCover& cover,
                               const MachineConfig& cfg, const UnrollConfig& unroll,
                               const GridDims& dims);

// Stable digest used for report traceability.
std::uint64_t fnv1a64(std::string_view text);
std::string to_hex64(std::uint64_t value);

}  // namespace opsten
