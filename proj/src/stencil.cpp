#include "opsten/stencil.hpp"

#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "opsten/errors.hpp"

namespace opsten {

std::string to_string(StencilShape shape) {
  switch (shape) {
    case StencilShape::box: return "box";
    case StencilShape::star: return "star";
    case StencilShape::custom: return "custom";
  }
  return "custom";
}

StencilShape shape_from_string(const std::string& s) {
  if (s == "box") return StencilShape::box;
  if (s == "star") return StencilShape::star;
  if (s == "custom") return StencilShape::custom;
  throw ConfigError("unknown stencil shape: " + s);
}

CoeffTensor::CoeffTensor(int dim, int order, std::vector<double> values)
    : dim_(dim), order_(order), values_(std::move(values)) {
  if (dim_ != 2 && dim_ != 3) throw ConfigError("coefficient tensor dim must be 2 or 3");
  if (order_ < 1) throw ConfigError("stencil order must be >= 1");
  std::size_t expect = 1;
  for (int a = 0; a < dim_; ++a) expect *= static_cast<std::size_t>(extent());
  if (values_.size() != expect)
    throw ConfigError("coefficient count " + std::to_string(values_.size()) + " does not match (2r+1)^dim = " +
                      std::to_string(expect));
}

std::size_t CoeffTensor::flat(const std::array<int, 3>& idx) const {
  const int e = extent();
  std::size_t f = 0;
  for (int a = 0; a < dim_; ++a) {
    if (idx[a] < 0 || idx[a] >= e) throw std::out_of_range("coefficient index out of range");
    f = f * static_cast<std::size_t>(e) + static_cast<std::size_t>(idx[a]);
  }
  return f;
}

std::array<int, 3> CoeffTensor::unflat(std::size_t flat_index) const {
  const int e = extent();
  std::array<int, 3> idx{0, 0, 0};
  for (int a = dim_ - 1; a >= 0; --a) {
    idx[a] = static_cast<int>(flat_index % static_cast<std::size_t>(e));
    flat_index /= static_cast<std::size_t>(e);
  }
  return idx;
}

std::size_t CoeffTensor::nonzero_count() const {
  std::size_t c = 0;
  for (double v : values_)
    if (v != 0.0) ++c;
  return c;
}

namespace {

// Nonzero off-axis entries are not representable by a star.
void validate_star(const CoeffTensor& t) {
  const int r = t.order();
  for (std::size_t f = 0; f < t.size(); ++f) {
    if (t.values()[f] == 0.0) continue;
    auto idx = t.unflat(f);
    int off_axis = 0;
    for (int a = 0; a < t.dim(); ++a)
      if (idx[a] != r) ++off_axis;
    if (off_axis > 1) throw ConfigError("star stencil has a nonzero weight off the center axes");
  }
}

}  // namespace

StencilSpec make_stencil(int dim, int order, StencilShape shape, std::vector<double> coefficients,
                         std::string name) {
  StencilSpec spec;
  spec.dim = dim;
  spec.order = order;
  spec.shape = shape;
  spec.gather = CoeffTensor(dim, order, std::move(coefficients));
  spec.name = std::move(name);
  if (shape == StencilShape::star) validate_star(spec.gather);
  return spec;
}

bool is_builtin_stencil_name(const std::string& name) {
  return name == "box2d" || name == "star2d" || name == "box3d" || name == "star3d";
}

StencilSpec builtin_stencil(const std::string& name, int order) {
  int dim = 0;
  StencilShape shape = StencilShape::box;
  if (name == "box2d") { dim = 2; shape = StencilShape::box; }
  else if (name == "star2d") { dim = 2; shape = StencilShape::star; }
  else if (name == "box3d") { dim = 3; shape = StencilShape::box; }
  else if (name == "star3d") { dim = 3; shape = StencilShape::star; }
  else throw ConfigError("unknown builtin stencil: " + name);

  if (order < 1) throw ConfigError("stencil order must be >= 1");
  const int e = 2 * order + 1;
  std::size_t total = 1;
  for (int a = 0; a < dim; ++a) total *= static_cast<std::size_t>(e);

  // Deterministic, asymmetric, nonzero on the support.
  auto value_for = [](std::size_t f) { return double((f * 7 + 3) % 23 + 1) / 24.0; };

  std::vector<double> v(total, 0.0);
  CoeffTensor probe(dim, order, std::vector<double>(total, 0.0));
  for (std::size_t f = 0; f < total; ++f) {
    if (shape == StencilShape::star) {
      auto idx = probe.unflat(f);
      int off_axis = 0;
      for (int a = 0; a < dim; ++a)
        if (idx[a] != order) ++off_axis;
      if (off_axis > 1) continue;
    }
    v[f] = value_for(f);
  }
  return make_stencil(dim, order, shape, std::move(v), name);
}

CoeffTensor reverse_tensor(const CoeffTensor& t) {
  const int e = t.extent();
  std::vector<double> out(t.size());
  for (std::size_t f = 0; f < t.size(); ++f) {
    auto idx = t.unflat(f);
    std::array<int, 3> rev{0, 0, 0};
    for (int a = 0; a < t.dim(); ++a) rev[a] = e - 1 - idx[a];
    out[t.flat(rev)] = t.values()[f];
  }
  return CoeffTensor(t.dim(), t.order(), std::move(out));
}

ScatterCoefficients gather_to_scatter(const StencilSpec& spec) {
  ScatterCoefficients sc;
  sc.tensor = reverse_tensor(spec.gather);
  sc.derived_from_gather = true;
  return sc;
}

double OuterCoefficientMatrix::at(int row, int col) const {
  if (row < 0 || row >= rows() || col < 0 || col >= cols())
    throw std::out_of_range("outer coefficient index out of range");
  return values[static_cast<std::size_t>(row) * cols() + col];
}

OuterCoefficientMatrix build_outer_coefficient_matrix(const std::vector<double>& slice, int order,
                                                      int lanes) {
  const int e = 2 * order + 1;
  if (lanes < 1) throw ConfigError("lane count must be >= 1");
  if (slice.size() != static_cast<std::size_t>(e) * e)
    throw ConfigError("slice must hold (2r+1)^2 values");
  OuterCoefficientMatrix co;
  co.lanes = lanes;
  co.order = order;
  co.values.assign(static_cast<std::size_t>(co.rows()) * co.cols(), 0.0);
  for (int p = 0; p < e; ++p)
    for (int q = 0; q < e; ++q)
      co.values[static_cast<std::size_t>(lanes - 1 + p) * e + q] = slice[static_cast<std::size_t>(p) * e + q];
  return co;
}

std::vector<double> coefficient_window(const OuterCoefficientMatrix& co, int col, int t) {
  const int n = co.lanes;
  const int r = co.order;
  if (col < 0 || col >= co.cols()) throw std::out_of_range("window column out of range");
  if (t < 0 || t >= n + 2 * r) throw std::out_of_range("window offset out of range");
  std::vector<double> w(static_cast<std::size_t>(n));
  for (int b = 0; b < n; ++b) w[static_cast<std::size_t>(b)] = co.at(n + 2 * r - 1 - t + b, col);
  return w;
}

std::vector<double> padded_line_vector(const std::vector<double>& weights, int lanes) {
  const int e = static_cast<int>(weights.size());
  if (e < 1 || e % 2 == 0) throw ConfigError("line weight vector must have odd length 2r+1");
  if (lanes < 1) throw ConfigError("lane count must be >= 1");
  std::vector<double> padded(static_cast<std::size_t>(2 * lanes + e - 2), 0.0);
  for (int p = 0; p < e; ++p) padded[static_cast<std::size_t>(lanes - 1 + p)] = weights[static_cast<std::size_t>(p)];
  return padded;
}

}  // namespace opsten
