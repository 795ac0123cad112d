#include "opsten/oracle.hpp"

#include <cmath>

#include "opsten/errors.hpp"

namespace opsten {

namespace {

void require_compatible(const StencilSpec& spec, const Grid& a) {
  if (a.dims.dim != spec.dim) throw ConfigError("grid dimensionality does not match stencil");
  if (a.dims.order != spec.order) throw ConfigError("grid halo width does not match stencil order");
}

// Walks interior points of `dims` in lexicographic order.
template <typename Fn>
void for_each_interior(const GridDims& dims, Fn&& fn) {
  const int r = dims.order;
  if (dims.dim == 2) {
    for (std::int64_t x = 0; x < dims.interior[0]; ++x)
      for (std::int64_t y = 0; y < dims.interior[1]; ++y) fn(std::array<std::int64_t, 3>{x + r, y + r, 0});
  } else {
    for (std::int64_t x = 0; x < dims.interior[0]; ++x)
      for (std::int64_t y = 0; y < dims.interior[1]; ++y)
        for (std::int64_t z = 0; z < dims.interior[2]; ++z)
          fn(std::array<std::int64_t, 3>{x + r, y + r, z + r});
  }
}

template <typename Fn>
void for_each_padded(const GridDims& dims, Fn&& fn) {
  if (dims.dim == 2) {
    for (std::int64_t x = 0; x < dims.padded(0); ++x)
      for (std::int64_t y = 0; y < dims.padded(1); ++y) fn(std::array<std::int64_t, 3>{x, y, 0});
  } else {
    for (std::int64_t x = 0; x < dims.padded(0); ++x)
      for (std::int64_t y = 0; y < dims.padded(1); ++y)
        for (std::int64_t z = 0; z < dims.padded(2); ++z) fn(std::array<std::int64_t, 3>{x, y, z});
  }
}

bool interior_point(const GridDims& dims, const std::array<std::int64_t, 3>& p) {
  const int r = dims.order;
  for (int ax = 0; ax < dims.dim; ++ax)
    if (p[ax] < r || p[ax] >= r + dims.interior[ax]) return false;
  return true;
}

// Scatter of an explicit cell list; shared by the full scatter and the
// per-line reference.
void scatter_cells(const CoeffTensor& cs, const std::vector<std::array<int, 3>>& cells,
                   const std::vector<double>& cell_values, const Grid& a, Grid& out) {
  const int r = cs.order();
  for_each_padded(a.dims, [&](const std::array<std::int64_t, 3>& p) {
    const double in = a.values[static_cast<std::size_t>(a.dims.flat_index(p))];
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const double w = cell_values[c];
      if (w == 0.0) continue;
      std::array<std::int64_t, 3> q = p;
      for (int ax = 0; ax < cs.dim(); ++ax) q[ax] += cells[c][ax] - r;
      if (!interior_point(out.dims, q)) continue;
      double& acc = out.values[static_cast<std::size_t>(out.dims.flat_index(q))];
      acc = std::fma(w, in, acc);
    }
  });
}

}  // namespace

Grid gather_reference(const StencilSpec& spec, const Grid& a) {
  require_compatible(spec, a);
  const CoeffTensor& cg = spec.gather;
  const int r = spec.order;
  Grid out = make_grid(a.dims);

  for_each_interior(a.dims, [&](const std::array<std::int64_t, 3>& p) {
    double acc = 0.0;
    for (std::size_t f = 0; f < cg.size(); ++f) {
      const double w = cg.values()[f];
      if (w == 0.0) continue;
      auto off = cg.unflat(f);
      std::array<std::int64_t, 3> q = p;
      for (int ax = 0; ax < spec.dim; ++ax) q[ax] += off[ax] - r;
      acc = std::fma(w, a.values[static_cast<std::size_t>(a.dims.flat_index(q))], acc);
    }
    out.values[static_cast<std::size_t>(out.dims.flat_index(p))] = acc;
  });
  return out;
}

Grid scatter_reference(const StencilSpec& spec, const Grid& a) {
  require_compatible(spec, a);
  ScatterCoefficients sc = gather_to_scatter(spec);
  Grid out = make_grid(a.dims);

  std::vector<std::array<int, 3>> cells;
  std::vector<double> values;
  for (std::size_t f = 0; f < sc.tensor.size(); ++f) {
    if (sc.tensor.values()[f] == 0.0) continue;
    cells.push_back(sc.tensor.unflat(f));
    values.push_back(sc.tensor.values()[f]);
  }
  scatter_cells(sc.tensor, cells, values, a, out);
  return out;
}

Grid cls_reference(const StencilSpec& spec, const LineCover& cover, const Grid& a) {
  require_compatible(spec, a);
  if (cover.dim != spec.dim || cover.order != spec.order)
    throw ConfigError("cover does not match stencil geometry");
  ScatterCoefficients sc = gather_to_scatter(spec);
  Grid out = make_grid(a.dims);

  for (std::size_t l = 0; l < cover.lines.size(); ++l) {
    auto cells = cover.lines[l].cells(spec.dim, sc.tensor.extent());
    std::vector<double> values(cells.size(), 0.0);
    for (std::size_t t = 0; t < cells.size(); ++t) values[t] = cover.line_weights[l][t];
    scatter_cells(sc.tensor, cells, values, a, out);
  }
  return out;
}

CompareReport compare(const Grid& b1, const Grid& b2, double rel_tol, double abs_tol) {
  if (!(b1.dims == b2.dims)) throw ConfigError("cannot compare grids with different dims");
  CompareReport rep;
  rep.rel_tol = rel_tol;
  rep.abs_tol = abs_tol;
  rep.pass = true;

  for_each_interior(b1.dims, [&](const std::array<std::int64_t, 3>& p) {
    const double v1 = b1.values[static_cast<std::size_t>(b1.dims.flat_index(p))];
    const double v2 = b2.values[static_cast<std::size_t>(b2.dims.flat_index(p))];
    const double diff = std::fabs(v1 - v2);
    const double scale = std::max(std::fabs(v1), std::fabs(v2));
    const double rel = scale > 0.0 ? diff / scale : 0.0;
    if (diff > rep.max_abs_err) rep.max_abs_err = diff;
    if (rel > rep.max_rel_err) {
      rep.max_rel_err = rel;
      for (int ax = 0; ax < b1.dims.dim; ++ax) rep.worst_index[ax] = p[ax] - b1.dims.order;
    }
    if (diff > abs_tol + rel_tol * scale) rep.pass = false;
  });
  return rep;
}

}  // namespace opsten
