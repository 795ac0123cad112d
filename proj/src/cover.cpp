#include "opsten/cover.hpp"

#include <algorithm>
#include <limits>

#include "opsten/errors.hpp"

namespace opsten {

bool CoefficientLine::axis_parallel() const {
  int nonzero = 0;
  for (int a = 0; a < 3; ++a) nonzero += direction[a] != 0;
  if (nonzero != 1) return false;
  for (int a = 0; a < 3; ++a)
    if (direction[a] != 0 && direction[a] != 1) return false;
  return true;
}

int CoefficientLine::free_axis() const {
  if (!axis_parallel()) return -1;
  for (int a = 0; a < 3; ++a)
    if (direction[a] != 0) return a;
  return -1;
}

std::vector<std::array<int, 3>> CoefficientLine::cells(int dim, int extent) const {
  std::vector<std::array<int, 3>> out;
  std::array<int, 3> p = anchor;
  for (int t = 0; t < extent; ++t) {
    bool inside = true;
    for (int a = 0; a < dim; ++a)
      if (p[a] < 0 || p[a] >= extent) inside = false;
    if (!inside) break;
    out.push_back(p);
    for (int a = 0; a < dim; ++a) p[a] += direction[a];
  }
  return out;
}

bool CoefficientLine::contains(const std::array<int, 3>& idx, int dim, int extent, int* t_out) const {
  auto cs = cells(dim, extent);
  for (std::size_t t = 0; t < cs.size(); ++t) {
    bool eq = true;
    for (int a = 0; a < dim; ++a)
      if (cs[t][a] != idx[a]) eq = false;
    if (eq) {
      if (t_out) *t_out = static_cast<int>(t);
      return true;
    }
  }
  return false;
}

CoefficientLine axis_line(int dim, int free_axis, const std::array<int, 3>& fixed) {
  if (free_axis < 0 || free_axis >= dim) throw ConfigError("free axis out of range");
  CoefficientLine line;
  line.direction = {0, 0, 0};
  line.direction[free_axis] = 1;
  line.anchor = fixed;
  line.anchor[free_axis] = 0;
  return line;
}

CoefficientLine general_line(const std::array<int, 3>& direction, const std::array<int, 3>& anchor) {
  bool any = false;
  for (int a = 0; a < 3; ++a) {
    if (direction[a] < -1 || direction[a] > 1) throw ConfigError("line direction components must be -1, 0, or 1");
    any = any || direction[a] != 0;
  }
  if (!any) throw ConfigError("line direction must be nonzero");
  CoefficientLine line;
  line.direction = direction;
  line.anchor = anchor;
  return line;
}

std::string to_string(CoverOption option) {
  switch (option) {
    case CoverOption::parallel: return "parallel";
    case CoverOption::orthogonal: return "orthogonal";
    case CoverOption::hybrid: return "hybrid";
    case CoverOption::minimal: return "minimal";
    case CoverOption::custom: return "custom";
  }
  return "custom";
}

CoverOption cover_option_from_string(const std::string& s) {
  if (s == "parallel") return CoverOption::parallel;
  if (s == "orthogonal") return CoverOption::orthogonal;
  if (s == "hybrid") return CoverOption::hybrid;
  if (s == "minimal") return CoverOption::minimal;
  if (s == "custom") return CoverOption::custom;
  throw ConfigError("unknown cover option: " + s);
}

bool LineCover::all_axis_parallel() const {
  for (const auto& l : lines)
    if (!l.axis_parallel()) return false;
  return true;
}

BipartiteGraph coefficient_graph(const CoeffTensor& scatter2d) {
  if (scatter2d.dim() != 2) throw ConfigError("coefficient graph requires a 2D slice");
  BipartiteGraph g;
  const int e = scatter2d.extent();
  g.left_count = e;
  g.right_count = e;
  for (int i = 0; i < e; ++i)
    for (int j = 0; j < e; ++j)
      if (scatter2d.at({i, j, 0}) != 0.0) g.edges.emplace_back(i, j);
  return g;
}

namespace {

struct MatchState {
  std::vector<std::vector<int>> adj;   // row -> cols
  std::vector<int> match_of_col;       // col -> row or -1
  std::vector<int> match_of_row;       // row -> col or -1
  std::vector<char> visited;

  bool try_augment(int row) {
    for (int col : adj[static_cast<std::size_t>(row)]) {
      if (visited[static_cast<std::size_t>(col)]) continue;
      visited[static_cast<std::size_t>(col)] = 1;
      if (match_of_col[static_cast<std::size_t>(col)] < 0 ||
          try_augment(match_of_col[static_cast<std::size_t>(col)])) {
        match_of_col[static_cast<std::size_t>(col)] = row;
        match_of_row[static_cast<std::size_t>(row)] = col;
        return true;
      }
    }
    return false;
  }
};

MatchState build_matching(const BipartiteGraph& g) {
  MatchState st;
  st.adj.assign(static_cast<std::size_t>(g.left_count), {});
  for (auto [u, v] : g.edges) st.adj[static_cast<std::size_t>(u)].push_back(v);
  st.match_of_col.assign(static_cast<std::size_t>(g.right_count), -1);
  st.match_of_row.assign(static_cast<std::size_t>(g.left_count), -1);
  for (int u = 0; u < g.left_count; ++u) {
    st.visited.assign(static_cast<std::size_t>(g.right_count), 0);
    st.try_augment(u);
  }
  return st;
}

// Alternating reachability from unmatched left vertices; the standard minimum
// cover is (L \ Z) + (R intersect Z).
VertexCover cover_from_left(const MatchState& st, int left_count, int right_count) {
  std::vector<char> zl(static_cast<std::size_t>(left_count), 0), zr(static_cast<std::size_t>(right_count), 0);
  std::vector<int> stack;
  for (int u = 0; u < left_count; ++u)
    if (st.match_of_row[static_cast<std::size_t>(u)] < 0) {
      zl[static_cast<std::size_t>(u)] = 1;
      stack.push_back(u);
    }
  while (!stack.empty()) {
    int u = stack.back();
    stack.pop_back();
    for (int v : st.adj[static_cast<std::size_t>(u)]) {
      if (zr[static_cast<std::size_t>(v)]) continue;
      if (st.match_of_row[static_cast<std::size_t>(u)] == v) continue;  // only non-matching edges forward
      zr[static_cast<std::size_t>(v)] = 1;
      int w = st.match_of_col[static_cast<std::size_t>(v)];
      if (w >= 0 && !zl[static_cast<std::size_t>(w)]) {
        zl[static_cast<std::size_t>(w)] = 1;
        stack.push_back(w);
      }
    }
  }
  VertexCover vc;
  for (int u = 0; u < left_count; ++u)
    if (!zl[static_cast<std::size_t>(u)]) vc.rows.push_back(u);
  for (int v = 0; v < right_count; ++v)
    if (zr[static_cast<std::size_t>(v)]) vc.cols.push_back(v);
  return vc;
}

BipartiteGraph transpose(const BipartiteGraph& g) {
  BipartiteGraph t;
  t.left_count = g.right_count;
  t.right_count = g.left_count;
  for (auto [u, v] : g.edges) t.edges.emplace_back(v, u);
  return t;
}

}  // namespace

std::vector<std::pair<int, int>> maximum_matching(const BipartiteGraph& g) {
  MatchState st = build_matching(g);
  std::vector<std::pair<int, int>> out;
  for (int u = 0; u < g.left_count; ++u)
    if (st.match_of_row[static_cast<std::size_t>(u)] >= 0)
      out.emplace_back(u, st.match_of_row[static_cast<std::size_t>(u)]);
  return out;
}

VertexCover minimum_vertex_cover(const BipartiteGraph& g) {
  MatchState st = build_matching(g);
  VertexCover a = cover_from_left(st, g.left_count, g.right_count);

  MatchState str = build_matching(transpose(g));
  VertexCover b_t = cover_from_left(str, g.right_count, g.left_count);
  VertexCover b;
  b.rows = b_t.cols;
  b.cols = b_t.rows;

  // Both are minimum covers; keep the column-heavy one.
  return b.cols.size() > a.cols.size() ? b : a;
}

namespace {

// True when the line's induced input vectors run along the last (unit-stride)
// grid axis: 2D lines varying along i, 3D lines varying along i or j.
bool contiguous_input(const CoefficientLine& line, int dim) {
  int f = line.free_axis();
  if (f < 0) return false;
  if (dim == 2) return f == 0;
  return f == 0 || f == 1;
}

}  // namespace

LineCover assign_weights(const std::vector<CoefficientLine>& lines, const ScatterCoefficients& sc,
                         int dim, int order, CoverOption tag) {
  const CoeffTensor& cs = sc.tensor;
  if (cs.dim() != dim || cs.order() != order) throw ConfigError("scatter tensor does not match cover geometry");
  const int e = cs.extent();

  LineCover cover;
  cover.option = tag;
  cover.dim = dim;
  cover.order = order;

  std::vector<std::vector<std::array<int, 3>>> owned(lines.size());
  std::vector<std::vector<double>> weights(lines.size());
  for (std::size_t l = 0; l < lines.size(); ++l)
    weights[l].assign(static_cast<std::size_t>(e), 0.0);

  for (std::size_t f = 0; f < cs.size(); ++f) {
    if (cs.values()[f] == 0.0) continue;
    auto idx = cs.unflat(f);
    int best = -1;
    int best_t = -1;
    int best_score = std::numeric_limits<int>::max();
    for (std::size_t l = 0; l < lines.size(); ++l) {
      int t = -1;
      if (!lines[l].contains(idx, dim, e, &t)) continue;
      int score = (contiguous_input(lines[l], dim) ? 0 : 1) * static_cast<int>(lines.size() + 1) +
                  static_cast<int>(l);
      if (score < best_score) {
        best_score = score;
        best = static_cast<int>(l);
        best_t = t;
      }
    }
    if (best < 0) {
      auto idx_str = std::to_string(idx[0]) + "," + std::to_string(idx[1]) + (dim == 3 ? "," + std::to_string(idx[2]) : std::string());
      throw CoverError("nonzero weight at (" + idx_str + ") is covered by no line");
    }
    owned[static_cast<std::size_t>(best)].push_back(idx);
    weights[static_cast<std::size_t>(best)][static_cast<std::size_t>(best_t)] = cs.values()[f];
  }

  for (std::size_t l = 0; l < lines.size(); ++l) {
    if (owned[l].empty()) continue;  // all-zero lines are dropped
    cover.lines.push_back(lines[l]);
    cover.owned.push_back(owned[l]);
    cover.line_weights.push_back(weights[l]);
  }
  return cover;
}

LineCover standard_cover(const StencilSpec& spec, CoverOption option) {
  ScatterCoefficients sc = gather_to_scatter(spec);
  const int r = spec.order;
  const int e = 2 * r + 1;
  std::vector<CoefficientLine> lines;

  switch (option) {
    case CoverOption::parallel:
      if (spec.dim == 2) {
        for (int j = 0; j < e; ++j) lines.push_back(axis_line(2, 0, {0, j, 0}));
      } else {
        // One line per (i, k) pair whose j-column holds at least one nonzero.
        for (int i = 0; i < e; ++i)
          for (int k = 0; k < e; ++k) {
            bool any = false;
            for (int j = 0; j < e; ++j)
              if (sc.tensor.at({i, j, k}) != 0.0) any = true;
            if (any) lines.push_back(axis_line(3, 1, {i, 0, k}));
          }
      }
      break;
    case CoverOption::orthogonal:
      if (spec.shape == StencilShape::custom)
        throw ConfigError("orthogonal cover requires a star or box stencil");
      if (spec.dim == 2) {
        lines.push_back(axis_line(2, 0, {0, r, 0}));
        lines.push_back(axis_line(2, 1, {r, 0, 0}));
      } else {
        lines.push_back(axis_line(3, 1, {r, 0, r}));
        lines.push_back(axis_line(3, 2, {r, r, 0}));
        lines.push_back(axis_line(3, 0, {0, r, r}));
      }
      break;
    case CoverOption::hybrid:
      if (spec.dim != 3) throw ConfigError("hybrid cover is only defined for 3D stencils");
      if (spec.shape == StencilShape::custom)
        throw ConfigError("hybrid cover requires a star or box stencil");
      for (int i = 0; i < e; ++i) lines.push_back(axis_line(3, 1, {i, 0, r}));
      lines.push_back(axis_line(3, 2, {r, r, 0}));
      break;
    case CoverOption::minimal:
      return minimal_axis_parallel_cover(spec, sc);
    case CoverOption::custom:
      throw ConfigError("custom covers must supply their own line set");
  }
  return assign_weights(lines, sc, spec.dim, spec.order, option);
}

LineCover minimal_axis_parallel_cover(const StencilSpec& spec, const ScatterCoefficients& sc) {
  if (spec.dim != 2) throw ConfigError("minimal cover search is only defined for 2D stencils");
  BipartiteGraph g = coefficient_graph(sc.tensor);
  VertexCover vc = minimum_vertex_cover(g);

  // Column vertices first: contiguous-input lines get the lower indices.
  std::vector<CoefficientLine> lines;
  for (int j : vc.cols) lines.push_back(axis_line(2, 0, {0, j, 0}));
  for (int i : vc.rows) lines.push_back(axis_line(2, 1, {i, 0, 0}));
  return assign_weights(lines, sc, spec.dim, spec.order, CoverOption::minimal);
}

}  // namespace opsten
