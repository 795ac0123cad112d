#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "opsten/stencil.hpp"

namespace opsten {

// A straight line of coefficient slots inside the (2r+1)^dim box. Axis-parallel
// lines have a unit direction; custom 2D covers may also use diagonal
// directions with components in {-1, 0, 1}. cells() walks anchor + t*direction
// for t >= 0 while inside the box, so the anchor must be the first in-box cell.
struct CoefficientLine {
  std::array<int, 3> direction{0, 0, 0};
  std::array<int, 3> anchor{0, 0, 0};

  bool axis_parallel() const;
  int free_axis() const;  // -1 unless axis-parallel
  std::vector<std::array<int, 3>> cells(int dim, int extent) const;
  // t_out receives the step index along the line.
  bool contains(const std::array<int, 3>& idx, int dim, int extent, int* t_out = nullptr) const;
};

CoefficientLine axis_line(int dim, int free_axis, const std::array<int, 3>& fixed);
CoefficientLine general_line(const std::array<int, 3>& direction, const std::array<int, 3>& anchor);

enum class CoverOption { parallel, orthogonal, hybrid, minimal, custom };

std::string to_string(CoverOption option);
CoverOption cover_option_from_string(const std::string& s);

// A set of lines plus an ownership assignment: every nonzero scatter weight
// belongs to exactly one line, so the per-line masked weights sum back to the
// scatter tensor. line_weights[l][t] is the owned value at step t along line l
// (zero where unowned).
struct LineCover {
  CoverOption option = CoverOption::custom;
  int dim = 2;
  int order = 1;
  std::vector<CoefficientLine> lines;
  std::vector<std::vector<std::array<int, 3>>> owned;
  std::vector<std::vector<double>> line_weights;

  bool all_axis_parallel() const;
};

// Rows/columns with nonzeros in a 2D scatter slice, one edge per nonzero.
struct BipartiteGraph {
  int left_count = 0;   // row vertices
  int right_count = 0;  // column vertices
  std::vector<std::pair<int, int>> edges;
};

BipartiteGraph coefficient_graph(const CoeffTensor& scatter2d);

// Augmenting-path maximum matching; returns matched (row, col) pairs.
std::vector<std::pair<int, int>> maximum_matching(const BipartiteGraph& g);

struct VertexCover {
  std::vector<int> rows;
  std::vector<int> cols;
  std::size_t size() const { return rows.size() + cols.size(); }
};

// Minimum vertex cover derived from a maximum matching via alternating
// reachability. Of the two symmetric constructions, prefers the one selecting
// more column vertices: columns become lines with contiguous input vectors.
VertexCover minimum_vertex_cover(const BipartiteGraph& g);

// Ownership resolution over a fixed line set. Ties prefer the line whose input
// vectors run along the unit-stride axis, then the lowest line index. Lines
// left without any owned weight are dropped. Throws CoverError if a nonzero is
// on no line.
LineCover assign_weights(const std::vector<CoefficientLine>& lines, const ScatterCoefficients& sc,
                         int dim, int order, CoverOption tag = CoverOption::custom);

// The named cover constructions. parallel works for any shape; orthogonal
// needs a star or box tag; hybrid is 3D-only; minimal is 2D-only.
LineCover standard_cover(const StencilSpec& spec, CoverOption option);

// 2D: minimum number of axis-parallel lines covering all nonzeros, via the
// vertex-cover reduction.
LineCover minimal_axis_parallel_cover(const StencilSpec& spec, const ScatterCoefficients& sc);

}  // namespace opsten
