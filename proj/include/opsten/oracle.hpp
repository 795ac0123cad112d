#pragma once

#include <array>
#include <cstdint>

#include "opsten/cover.hpp"
#include "opsten/grid.hpp"
#include "opsten/stencil.hpp"

namespace opsten {

// Scalar references. All of them visit points in lexicographic order and
// accumulate with fused multiply-add, so results are reproducible bit for bit.
// Outputs are written to interior points only; the halo stays zero.

// out[p] = sum over offsets of gather[off] * in[p + off - r]
Grid gather_reference(const StencilSpec& spec, const Grid& a);

// Every input point (halo included) scatters into the interior outputs it
// reaches. Mathematically identical to gather_reference; the summation order
// differs.
Grid scatter_reference(const StencilSpec& spec, const Grid& a);

// Per-line scatter over the cover's masked weights, lines processed in order.
// Works for any line geometry, diagonals included.
Grid cls_reference(const StencilSpec& spec, const LineCover& cover, const Grid& a);

struct CompareReport {
  double rel_tol = 0.0;
  double abs_tol = 0.0;
  double max_abs_err = 0.0;
  double max_rel_err = 0.0;
  std::array<std::int64_t, 3> worst_index{0, 0, 0};  // interior coordinates
  bool pass = false;
};

// pass iff |b1 - b2| <= abs_tol + rel_tol * max(|b1|, |b2|) at every interior
// point. Grids must have identical dims.
CompareReport compare(const Grid& b1, const Grid& b2, double rel_tol, double abs_tol);

}  // namespace opsten
