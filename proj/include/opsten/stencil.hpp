#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

namespace opsten {

enum class StencilShape { box, star, custom };

std::string to_string(StencilShape shape);
StencilShape shape_from_string(const std::string& s);

// Dense coefficient tensor over the (2r+1)^dim offset box, row-major with the
// last axis contiguous. Index components are 0..2r; the stencil center sits at
// (r, ..., r).
class CoeffTensor {
public:
  CoeffTensor() = default;
  CoeffTensor(int dim, int order, std::vector<double> values);

  int dim() const { return dim_; }
  int order() const { return order_; }
  int extent() const { return 2 * order_ + 1; }
  std::size_t size() const { return values_.size(); }

  std::size_t flat(const std::array<int, 3>& idx) const;
  std::array<int, 3> unflat(std::size_t flat_index) const;

  double at(const std::array<int, 3>& idx) const { return values_[flat(idx)]; }
  double& at(const std::array<int, 3>& idx) { return values_[flat(idx)]; }

  const std::vector<double>& values() const { return values_; }
  std::size_t nonzero_count() const;

private:
  int dim_ = 2;
  int order_ = 1;
  std::vector<double> values_;
};

// A stencil in gather form: out[p] = sum over offsets of gather[off] * in[p + off - r].
struct StencilSpec {
  int dim = 2;
  int order = 1;
  StencilShape shape = StencilShape::box;
  CoeffTensor gather;
  std::string name = "custom";
};

// Validates extents and, for star shapes, that every nonzero lies on an axis
// through the center.
StencilSpec make_stencil(int dim, int order, StencilShape shape, std::vector<double> coefficients,
                         std::string name = "custom");

// Built-in stencils: box2d, star2d, box3d, star3d. Coefficient values follow a
// fixed asymmetric formula so index-reversal bugs cannot cancel out.
StencilSpec builtin_stencil(const std::string& name, int order);
bool is_builtin_stencil_name(const std::string& name);

// Scatter form of the same stencil: in[p] contributes scatter[idx] to
// out[p + idx - r]. Obtained from the gather tensor by full index reversal;
// the reversal is pure index arithmetic, no permutation matrix is built.
struct ScatterCoefficients {
  CoeffTensor tensor;
  bool derived_from_gather = false;
};

CoeffTensor reverse_tensor(const CoeffTensor& t);
ScatterCoefficients gather_to_scatter(const StencilSpec& spec);

// Zero-padded coefficient matrix for one 2D scatter slice, sized
// (2n+2r-1) x (2r+1). Rows 0..n-2 and n+2r..2n+2r-2 are zero; rows
// n-1..n+2r-1 hold the slice rows. Column windows of this matrix are the
// per-input-offset coefficient vectors consumed by outer-product updates.
struct OuterCoefficientMatrix {
  int lanes = 0;  // n
  int order = 0;  // r
  std::vector<double> values;  // row-major rows() x cols()

  int rows() const { return 2 * lanes + 2 * order - 1; }
  int cols() const { return 2 * order + 1; }
  double at(int row, int col) const;
};

// slice: (2r+1) x (2r+1) row-major scatter slice.
OuterCoefficientMatrix build_outer_coefficient_matrix(const std::vector<double>& slice, int order,
                                                      int lanes);

// n coefficients for input offset t in 0..n+2r-1: rows
// (n+2r-1-t)..(2n+2r-2-t) of the given column. Throws on out-of-range input.
std::vector<double> coefficient_window(const OuterCoefficientMatrix& co, int col, int t);

// Padded form of a single coefficient line: (2n+2r-1) values with
// padded[n-1+p] = weights[p]. Equals one column of the matrix above when the
// slice is masked down to that line. Windows are contiguous slices of it:
// window(t)[b] = padded[n+2r-1-t+b] = weights[2r+b-t].
std::vector<double> padded_line_vector(const std::vector<double>& weights, int lanes);

}  // namespace opsten
