#include "opsten/codegen.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <numeric>
#include <string>
#include <string_view>

#include "opsten/errors.hpp"

namespace opsten {
namespace {

// Lowering class of a coefficient line. Row lines scatter across accumulator
// rows and pair coefficient windows with contiguous input rows. Vec lines run
// along the vector axis and need a transpose through the staging matrix.
// Plane lines (3D free axis 0) are handled by a second pass that revisits
// stored output blocks.
enum class LineClass { row, vec, plane };

struct LineInfo {
  const CoefficientLine* line = nullptr;
  int ordinal = 0;  // index into cover.lines and the coefficient buffer
  LineClass cls = LineClass::row;
  std::vector<double> weights;  // by free-axis coordinate, size 2r+1
  bool empty = true;            // no nonzero owned weight; emits nothing
  int min_nz = 0;
  int max_nz = 0;
  int amin = 1;  // active window offsets form the interval [amin, amax]
  int amax = 0;
  int span = 0;  // max_nz - min_nz + lanes

  // Input offsets precomputed as (2r - fixed coordinate) per role.
  int ext_lane = 0;     // row: EXT shift; plane: vector-axis offset of the input vector
  int row_shift = 0;    // vec: scatter-axis offset; plane: offset along the middle axis
  int plane_shift = 0;  // 3D row: accumulator plane = t_i - plane_shift; 3D vec: input plane offset

  bool active(int t) const { return !empty && t >= amin && t <= amax; }
};

std::vector<LineInfo> classify_lines(const StencilSpec& spec, const LineCover& cover, int lanes) {
  if (cover.dim != spec.dim || cover.order != spec.order) {
    throw ConfigError("line cover does not match stencil rank or order");
  }
  if (cover.line_weights.size() != cover.lines.size()) {
    throw ConfigError("line cover is missing its weight assignment");
  }
  const int dim = spec.dim;
  const int r = spec.order;
  const int extent = 2 * r + 1;
  std::vector<LineInfo> out;
  out.reserve(cover.lines.size());
  for (std::size_t l = 0; l < cover.lines.size(); ++l) {
    const CoefficientLine& line = cover.lines[l];
    if (!line.axis_parallel()) {
      throw ConfigError("diagonal coefficient lines have no vector lowering; use an axis-parallel cover");
    }
    const int f = line.free_axis();
    LineInfo info;
    info.line = &line;
    info.ordinal = static_cast<int>(l);
    if (dim == 2) {
      info.cls = (f == 0) ? LineClass::row : LineClass::vec;
    } else {
      info.cls = (f == 1) ? LineClass::row : (f == 2 ? LineClass::vec : LineClass::plane);
    }
    info.weights.assign(static_cast<std::size_t>(extent), 0.0);
    const auto cells = line.cells(dim, extent);
    const auto& steps = cover.line_weights[l];
    for (std::size_t t = 0; t < cells.size() && t < steps.size(); ++t) {
      info.weights[static_cast<std::size_t>(cells[t][static_cast<std::size_t>(f)])] = steps[t];
    }
    info.min_nz = -1;
    for (int p = 0; p < extent; ++p) {
      if (info.weights[static_cast<std::size_t>(p)] != 0.0) {
        if (info.min_nz < 0) info.min_nz = p;
        info.max_nz = p;
      }
    }
    info.empty = info.min_nz < 0;
    if (!info.empty) {
      info.amin = 2 * r - info.max_nz;
      info.amax = 2 * r - info.min_nz + lanes - 1;
      info.span = info.max_nz - info.min_nz + lanes;
    }
    const auto& a = line.anchor;
    switch (info.cls) {
      case LineClass::row:
        info.ext_lane = 2 * r - a[static_cast<std::size_t>(dim - 1)];
        if (dim == 3) info.plane_shift = 2 * r - a[0];
        break;
      case LineClass::vec:
        info.row_shift = 2 * r - a[static_cast<std::size_t>(dim - 2)];
        if (dim == 3) info.plane_shift = 2 * r - a[0];
        break;
      case LineClass::plane:
        info.row_shift = 2 * r - a[1];
        info.ext_lane = 2 * r - a[2];
        break;
    }
    out.push_back(std::move(info));
  }
  return out;
}

// Fixed vector-register slots: row-line windows first, then the row chunks,
// one scratch (EXT target and staging load temp), the hoisted vec-line
// windows, and the extracted column.
struct RegPlan {
  int rows = 0;
  int chunk_base = 0;
  int ublk = 0;
  int scratch = 0;
  int hoist_base = 0;
  int hoist_count = 0;
  int col_reg = 0;
  int vregs_needed = 0;
  int accs = 0;
  int staging = 0;
  int mregs_needed = 0;
};

RegPlan make_reg_plan(const std::vector<LineInfo>& infos, int dim, const UnrollConfig& unroll) {
  RegPlan plan;
  bool has_vec = false;
  for (const LineInfo& li : infos) {
    if (li.cls == LineClass::row) ++plan.rows;
    if (li.cls == LineClass::vec && !li.empty) {
      has_vec = true;
      plan.hoist_count = std::max(plan.hoist_count, li.span);
    }
  }
  plan.ublk = (dim == 2) ? unroll.uj : unroll.uk;
  plan.chunk_base = plan.rows;
  plan.scratch = plan.rows + plan.ublk + 1;
  plan.hoist_base = plan.scratch + 1;
  plan.col_reg = plan.hoist_base + plan.hoist_count;
  plan.vregs_needed = has_vec ? plan.col_reg + 1 : plan.scratch + 1;
  plan.accs = (dim == 2) ? unroll.uj : unroll.ui * unroll.uk;
  plan.staging = plan.accs;
  plan.mregs_needed = plan.accs + (has_vec ? 1 : 0);
  return plan;
}

void check_budget(const RegPlan& plan, const MachineConfig& cfg) {
  if (plan.vregs_needed > cfg.vregs) {
    throw BudgetError("vector registers: kernel needs " + std::to_string(plan.vregs_needed) +
                      ", machine has " + std::to_string(cfg.vregs));
  }
  if (plan.mregs_needed > cfg.mregs) {
    throw BudgetError("matrix registers: kernel needs " + std::to_string(plan.mregs_needed) +
                      ", machine has " + std::to_string(cfg.mregs));
  }
}

void check_unroll_positive(const UnrollConfig& unroll) {
  if (unroll.ui < 1 || unroll.uj < 1 || unroll.uk < 1) {
    throw ConfigError("unroll factors must be positive");
  }
}

// True when some row line contributes an outer product for this input row.
bool row_fire_2d(const std::vector<const LineInfo*>& rows, int t) {
  for (const LineInfo* li : rows) {
    if (li->active(t)) return true;
  }
  return false;
}

bool row_fire_3d(const std::vector<const LineInfo*>& rows, int tj, int ti, int ui) {
  for (const LineInfo* li : rows) {
    if (!li->active(tj)) continue;
    const int io = ti - li->plane_shift;
    if (io >= 0 && io < ui) return true;
  }
  return false;
}

// Column oc of staged chunk m feeds accumulator block m with window oc and
// block m-1 with window n+oc. A chunk is staged only if one of those windows
// is active somewhere.
bool staged_chunk_used(const LineInfo& vl, int m, int ublk, int n, int r) {
  for (int oc = 0; oc < n; ++oc) {
    if (m < ublk && vl.active(oc)) return true;
    if (m >= 1 && oc < 2 * r && vl.active(n + oc)) return true;
  }
  return false;
}

void require_pass_b_sizes(const GridDims& dims, int lanes) {
  for (int axis : {0, 2}) {
    const std::int64_t extent = dims.interior[static_cast<std::size_t>(axis)];
    if (extent % lanes != 0) {
      throw SizeError("interior extent " + std::to_string(extent) + " along axis " +
                      std::to_string(axis) + " must be a multiple of " + std::to_string(lanes) +
                      " (lanes) to tile plane-line updates");
    }
  }
}

struct Emitter {
  const MachineConfig& cfg;
  const UnrollConfig& unroll;
  const GridDims& dims;
  const MemoryLayout& layout;
  const RegPlan& regs;
  int n;
  int r;
  std::vector<const LineInfo*> row_lines;
  std::vector<const LineInfo*> vec_lines;
  std::vector<const LineInfo*> plane_lines;
  std::vector<int> shifts;        // distinct row-line EXT lanes, ascending
  std::vector<int> cv_slot;       // row-line ordinal -> vector register
  std::vector<Instruction> code;

  Emitter(const std::vector<LineInfo>& infos, const MachineConfig& cfg_, const UnrollConfig& u,
          const GridDims& d, const MemoryLayout& lay, const RegPlan& rp)
      : cfg(cfg_), unroll(u), dims(d), layout(lay), regs(rp), n(cfg_.lanes), r(d.order) {
    cv_slot.assign(infos.size(), -1);
    int slot = 0;
    for (const LineInfo& li : infos) {
      switch (li.cls) {
        case LineClass::row:
          cv_slot[static_cast<std::size_t>(li.ordinal)] = slot++;
          row_lines.push_back(&li);
          break;
        case LineClass::vec:
          vec_lines.push_back(&li);
          break;
        case LineClass::plane:
          plane_lines.push_back(&li);
          break;
      }
    }
    for (const LineInfo* li : row_lines) {
      if (!li->empty) shifts.push_back(li->ext_lane);
    }
    std::sort(shifts.begin(), shifts.end());
    shifts.erase(std::unique(shifts.begin(), shifts.end()), shifts.end());
  }

  std::int64_t cv_addr(const LineInfo& li, int t) const {
    const std::int64_t stride = 2 * n + 2 * r - 1;
    return layout.cv_base + li.ordinal * stride + (n + 2 * r - 1 - t);
  }

  // va covering accumulator columns of block blk, shifted by s lanes into the
  // next chunk. s = 0 uses the chunk register directly.
  int assemble_av(int blk, int s) {
    if (s == 0) return regs.chunk_base + blk;
    code.push_back(Instruction::ext(regs.scratch, regs.chunk_base + blk, regs.chunk_base + blk + 1, s));
    return regs.scratch;
  }

  void emit_group_2d(std::int64_t gi, std::int64_t gj) {
    const int uj = unroll.uj;
    for (int blk = 0; blk < uj; ++blk) code.push_back(Instruction::mzero(blk));
    for (int t = 0; t < n + 2 * r; ++t) {
      if (!row_fire_2d(row_lines, t)) continue;
      for (const LineInfo* li : row_lines) {
        if (li->active(t)) {
          code.push_back(Instruction::vload(cv_slot[static_cast<std::size_t>(li->ordinal)], cv_addr(*li, t)));
        }
      }
      const std::int64_t x = gi + t;
      for (int m = 0; m <= uj; ++m) {
        code.push_back(Instruction::vload(regs.chunk_base + m, layout.a_base + dims.flat(x, gj + std::int64_t(m) * n)));
      }
      for (int s : shifts) {
        std::vector<const LineInfo*> firing;
        for (const LineInfo* li : row_lines) {
          if (li->ext_lane == s && li->active(t)) firing.push_back(li);
        }
        if (firing.empty()) continue;
        for (int blk = 0; blk < uj; ++blk) {
          const int av = assemble_av(blk, s);
          for (const LineInfo* li : firing) {
            code.push_back(Instruction::fmopa(blk, cv_slot[static_cast<std::size_t>(li->ordinal)], av));
          }
        }
      }
    }
    for (const LineInfo* vl : vec_lines) {
      if (!vl->empty) emit_vec_2d(*vl, gi, gj);
    }
    for (int blk = 0; blk < uj; ++blk) {
      for (int a = 0; a < n; ++a) {
        code.push_back(Instruction::mstore_row(
            blk, a, layout.b_base + dims.flat(gi + r + a, gj + r + std::int64_t(blk) * n)));
      }
    }
  }

  void emit_vec_2d(const LineInfo& vl, std::int64_t gi, std::int64_t gj) {
    hoist_windows(vl);
    const int uj = unroll.uj;
    for (int m = 0; m <= uj; ++m) {
      if (!staged_chunk_used(vl, m, uj, n, r)) continue;
      stage_chunk(dims.flat(gi + vl.row_shift, gj + std::int64_t(m) * n), dims.padded(1));
      emit_staged_columns(vl, m, uj, 0, 1);
    }
  }

  void emit_group_3d(std::int64_t gi, std::int64_t gj, std::int64_t gk) {
    const int ui = unroll.ui;
    const int uk = unroll.uk;
    for (int acc = 0; acc < ui * uk; ++acc) code.push_back(Instruction::mzero(acc));
    for (int tj = 0; tj < n + 2 * r; ++tj) {
      for (const LineInfo* li : row_lines) {
        if (li->active(tj)) {
          code.push_back(Instruction::vload(cv_slot[static_cast<std::size_t>(li->ordinal)], cv_addr(*li, tj)));
        }
      }
      const std::int64_t y = gj + tj;
      for (int ti = 0; ti < ui + 2 * r; ++ti) {
        if (!row_fire_3d(row_lines, tj, ti, ui)) continue;
        const std::int64_t x = gi + ti;
        for (int m = 0; m <= uk; ++m) {
          code.push_back(Instruction::vload(regs.chunk_base + m,
                                            layout.a_base + dims.flat(x, y, gk + std::int64_t(m) * n)));
        }
        for (int s : shifts) {
          std::vector<const LineInfo*> firing;
          for (const LineInfo* li : row_lines) {
            if (li->ext_lane != s || !li->active(tj)) continue;
            const int io = ti - li->plane_shift;
            if (io >= 0 && io < ui) firing.push_back(li);
          }
          if (firing.empty()) continue;
          for (int kblk = 0; kblk < uk; ++kblk) {
            const int av = assemble_av(kblk, s);
            for (const LineInfo* li : firing) {
              const int io = ti - li->plane_shift;
              code.push_back(Instruction::fmopa(io * uk + kblk,
                                                cv_slot[static_cast<std::size_t>(li->ordinal)], av));
            }
          }
        }
      }
    }
    for (const LineInfo* vl : vec_lines) {
      if (!vl->empty) emit_vec_3d(*vl, gi, gj, gk);
    }
    for (int io = 0; io < ui; ++io) {
      for (int kblk = 0; kblk < uk; ++kblk) {
        for (int a = 0; a < n; ++a) {
          code.push_back(Instruction::mstore_row(
              io * uk + kblk, a,
              layout.b_base + dims.flat(gi + r + io, gj + r + a, gk + r + std::int64_t(kblk) * n)));
        }
      }
    }
  }

  void emit_vec_3d(const LineInfo& vl, std::int64_t gi, std::int64_t gj, std::int64_t gk) {
    hoist_windows(vl);
    const int uk = unroll.uk;
    for (int io = 0; io < unroll.ui; ++io) {
      const std::int64_t x = gi + io + vl.plane_shift;
      for (int m = 0; m <= uk; ++m) {
        if (!staged_chunk_used(vl, m, uk, n, r)) continue;
        stage_chunk_3d(x, gj + vl.row_shift, gk + std::int64_t(m) * n);
        emit_staged_columns(vl, m, uk, io * uk, 1);
      }
    }
  }

  void hoist_windows(const LineInfo& vl) {
    for (int t = vl.amin; t <= vl.amax; ++t) {
      code.push_back(Instruction::vload(regs.hoist_base + (t - vl.amin), cv_addr(vl, t)));
    }
  }

  // Loads n consecutive input rows into the staging matrix. 2D rows advance
  // by the padded row pitch; the 3D variant advances along the middle axis.
  void stage_chunk(std::int64_t addr0, std::int64_t pitch) {
    for (int a = 0; a < n; ++a) {
      code.push_back(Instruction::vload(regs.scratch, layout.a_base + addr0 + std::int64_t(a) * pitch));
      code.push_back(Instruction::mova_row(regs.staging, a, regs.scratch));
    }
  }

  void stage_chunk_3d(std::int64_t x, std::int64_t y0, std::int64_t z) {
    for (int a = 0; a < n; ++a) {
      code.push_back(Instruction::vload(regs.scratch, layout.a_base + dims.flat(x, y0 + a, z)));
      code.push_back(Instruction::mova_row(regs.staging, a, regs.scratch));
    }
  }

  // Extracted column oc of staged chunk m serves accumulator block m (window
  // oc) and block m-1 (window n+oc). acc_base/acc_step map block index to the
  // matrix register.
  void emit_staged_columns(const LineInfo& vl, int m, int ublk, int acc_base, int acc_step) {
    for (int oc = 0; oc < n; ++oc) {
      bool extracted = false;
      const int pairs[2][2] = {{m, oc}, {m - 1, n + oc}};
      for (const auto& pr : pairs) {
        const int blk = pr[0];
        const int t = pr[1];
        if (blk < 0 || blk >= ublk) continue;
        if (t >= n && oc >= 2 * r) continue;
        if (!vl.active(t)) continue;
        if (!extracted) {
          code.push_back(Instruction::mova_col(regs.col_reg, regs.staging, oc));
          extracted = true;
        }
        code.push_back(Instruction::fmopa(acc_base + blk * acc_step, regs.col_reg,
                                          regs.hoist_base + (t - vl.amin)));
      }
    }
  }

  // Plane lines revisit each stored output block: the accumulator is seeded
  // from B, updated with windows along the leading axis, and stored back.
  void emit_pass_b() {
    if (plane_lines.empty()) return;
    const std::int64_t bi_count = dims.interior[0] / n;
    const std::int64_t bk_count = dims.interior[2] / n;
    for (std::int64_t bi = 0; bi < bi_count; ++bi) {
      for (std::int64_t j0 = 0; j0 < dims.interior[1]; ++j0) {
        for (std::int64_t bk = 0; bk < bk_count; ++bk) {
          for (int a = 0; a < n; ++a) {
            code.push_back(Instruction::vload(0, layout.b_base + dims.flat(bi * n + r + a, j0 + r, bk * n + r)));
            code.push_back(Instruction::mova_row(0, a, 0));
          }
          for (const LineInfo* pl : plane_lines) {
            if (pl->empty) continue;
            for (int t = pl->amin; t <= pl->amax; ++t) {
              code.push_back(Instruction::vload(1, cv_addr(*pl, t)));
              code.push_back(Instruction::vload(
                  2, layout.a_base + dims.flat(bi * n + t, j0 + pl->row_shift, bk * n + pl->ext_lane)));
              code.push_back(Instruction::fmopa(0, 1, 2));
            }
          }
          for (int a = 0; a < n; ++a) {
            code.push_back(Instruction::mstore_row(0, a, layout.b_base + dims.flat(bi * n + r + a, j0 + r, bk * n + r)));
          }
        }
      }
    }
  }

  void run(const TilePlan& plan) {
    for (const TileGroup& g : plan.groups) {
      if (dims.dim == 2) {
        emit_group_2d(g.base[0], g.base[1]);
      } else {
        emit_group_3d(g.base[0], g.base[1], g.base[2]);
      }
    }
    emit_pass_b();
  }
};

std::string canonical_config(const StencilSpec& spec, const LineCover& cover,
                             const MachineConfig& cfg, const UnrollConfig& unroll,
                             const GridDims& dims) {
  std::string s;
  s += "stencil=" + spec.name;
  s += ";dim=" + std::to_string(spec.dim);
  s += ";order=" + std::to_string(spec.order);
  s += ";shape=" + std::string(to_string(spec.shape));
  s += ";coeff=";
  char buf[20];
  for (double v : spec.gather.values()) {
    std::uint64_t bits = 0;
    std::memcpy(&bits, &v, sizeof bits);
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(bits));
    s += buf;
  }
  s += ";cover=" + std::string(to_string(cover.option));
  for (const CoefficientLine& line : cover.lines) {
    s += ";line=";
    for (int a = 0; a < 3; ++a) s += std::to_string(line.direction[static_cast<std::size_t>(a)]) + ",";
    s += "@";
    for (int a = 0; a < 3; ++a) s += std::to_string(line.anchor[static_cast<std::size_t>(a)]) + ",";
  }
  s += ";lanes=" + std::to_string(cfg.lanes);
  s += ";vregs=" + std::to_string(cfg.vregs);
  s += ";mregs=" + std::to_string(cfg.mregs);
  s += ";ui=" + std::to_string(unroll.ui);
  s += ";uj=" + std::to_string(unroll.uj);
  s += ";uk=" + std::to_string(unroll.uk);
  s += ";size=";
  for (int a = 0; a < dims.dim; ++a) {
    if (a) s += "x";
    s += std::to_string(dims.interior[static_cast<std::size_t>(a)]);
  }
  return s;
}

}  // namespace

TilePlan plan_tiles(const GridDims& dims, int lanes, const UnrollConfig& unroll) {
  check_unroll_positive(unroll);
  const int n = lanes;
  TilePlan plan;
  const auto fail = [&](int axis, std::int64_t extent, std::int64_t multiple, const char* what) {
    throw SizeError("interior extent " + std::to_string(extent) + " along axis " +
                    std::to_string(axis) + " must be a multiple of " + std::to_string(multiple) +
                    " (" + what + ")");
  };
  if (dims.dim == 2) {
    if (unroll.ui != 1 || unroll.uk != 1) {
      throw ConfigError("2d kernels take unroll-j only");
    }
    if (dims.interior[0] % n != 0) fail(0, dims.interior[0], n, "lanes");
    const std::int64_t fj = std::int64_t(n) * unroll.uj;
    if (dims.interior[1] % fj != 0) fail(1, dims.interior[1], fj, "lanes x unroll-j");
    plan.group_counts = {dims.interior[0] / n, dims.interior[1] / fj, 1};
    for (std::int64_t a = 0; a < plan.group_counts[0]; ++a) {
      for (std::int64_t b = 0; b < plan.group_counts[1]; ++b) {
        plan.groups.push_back({{a * n, b * fj, 0}});
      }
    }
  } else {
    if (unroll.uj != 1) {
      throw ConfigError("unroll-j applies to 2d kernels only");
    }
    if (dims.interior[0] % unroll.ui != 0) fail(0, dims.interior[0], unroll.ui, "unroll-i");
    if (dims.interior[1] % n != 0) fail(1, dims.interior[1], n, "lanes");
    const std::int64_t fk = std::int64_t(n) * unroll.uk;
    if (dims.interior[2] % fk != 0) fail(2, dims.interior[2], fk, "lanes x unroll-k");
    plan.group_counts = {dims.interior[0] / unroll.ui, dims.interior[1] / n, dims.interior[2] / fk};
    for (std::int64_t a = 0; a < plan.group_counts[0]; ++a) {
      for (std::int64_t b = 0; b < plan.group_counts[1]; ++b) {
        for (std::int64_t c = 0; c < plan.group_counts[2]; ++c) {
          plan.groups.push_back({{a * unroll.ui, b * n, c * fk}});
        }
      }
    }
  }
  return plan;
}

MemoryLayout plan_memory(const GridDims& dims, const LineCover& cover, int lanes) {
  if (cover.dim != dims.dim || cover.order != dims.order) {
    throw ConfigError("line cover does not match grid rank or order");
  }
  MemoryLayout layout;
  const std::int64_t pv = dims.padded_volume();
  layout.a_base = 0;
  layout.b_base = pv;
  layout.cv_base = 2 * pv;
  layout.total = layout.cv_base +
                 std::int64_t(cover.lines.size()) * (2 * lanes + 2 * dims.order - 1);
  return layout;
}

void validate_budget(const StencilSpec& spec, const LineCover& cover, const MachineConfig& cfg,
                     const UnrollConfig& unroll) {
  cfg.validate();
  check_unroll_positive(unroll);
  const auto infos = classify_lines(spec, cover, cfg.lanes);
  check_budget(make_reg_plan(infos, spec.dim, unroll), cfg);
}

PredictedStats predict_stats(const StencilSpec& spec, const LineCover& cover,
                             const MachineConfig& cfg, const UnrollConfig& unroll,
                             const GridDims& dims) {
  cfg.validate();
  const int n = cfg.lanes;
  const int r = spec.order;
  if (2 * r >= n) {
    throw ConfigError("vector lanes must exceed twice the stencil order");
  }
  const auto infos = classify_lines(spec, cover, n);
  const TilePlan plan = plan_tiles(dims, n, unroll);

  std::vector<const LineInfo*> rows, vecs, planes;
  for (const LineInfo& li : infos) {
    if (li.empty) continue;
    if (li.cls == LineClass::row) rows.push_back(&li);
    if (li.cls == LineClass::vec) vecs.push_back(&li);
    if (li.cls == LineClass::plane) planes.push_back(&li);
  }
  if (!planes.empty()) require_pass_b_sizes(dims, n);

  PredictedStats st;
  std::uint64_t nonempty = 0;
  for (const LineInfo& li : infos) {
    if (li.empty) continue;
    st.fmopa_per_subblock += static_cast<std::uint64_t>(li.span);
    ++nonempty;
  }
  const std::uint64_t volume = static_cast<std::uint64_t>(dims.interior_volume());
  st.subblocks = volume / (static_cast<std::uint64_t>(n) * n);
  st.fmopa_total = st.fmopa_per_subblock * st.subblocks;
  st.a_row_loads_per_plane =
      static_cast<std::uint64_t>((dims.dim == 3 ? unroll.ui : n) + 2 * r);

  std::uint64_t cv_group = 0;
  for (const LineInfo* li : rows) cv_group += static_cast<std::uint64_t>(li->span);
  for (const LineInfo* li : vecs) cv_group += static_cast<std::uint64_t>(li->span);
  st.cv_loads_per_group = cv_group;

  // Mirror the emitter's trip counts exactly.
  std::uint64_t row_pass = 0;
  if (dims.dim == 2) {
    for (int t = 0; t < n + 2 * r; ++t) {
      if (row_fire_2d(rows, t)) row_pass += static_cast<std::uint64_t>(unroll.uj) + 1;
    }
  } else {
    for (int tj = 0; tj < n + 2 * r; ++tj) {
      for (int ti = 0; ti < unroll.ui + 2 * r; ++ti) {
        if (row_fire_3d(rows, tj, ti, unroll.ui)) row_pass += static_cast<std::uint64_t>(unroll.uk) + 1;
      }
    }
  }
  std::uint64_t vec_loads = 0;
  const int ublk = (dims.dim == 2) ? unroll.uj : unroll.uk;
  for (const LineInfo* vl : vecs) {
    std::uint64_t staged = 0;
    for (int m = 0; m <= ublk; ++m) {
      if (staged_chunk_used(*vl, m, ublk, n, r)) ++staged;
    }
    vec_loads += staged * static_cast<std::uint64_t>(n) *
                 static_cast<std::uint64_t>(dims.dim == 3 ? unroll.ui : 1);
  }

  const std::uint64_t groups = plan.groups.size();
  std::uint64_t blocks_b = 0;
  std::uint64_t per_block_b = 0;
  std::uint64_t cv_b = 0;
  if (!planes.empty()) {
    blocks_b = static_cast<std::uint64_t>(dims.interior[0] / n) *
               static_cast<std::uint64_t>(dims.interior[1]) *
               static_cast<std::uint64_t>(dims.interior[2] / n);
    for (const LineInfo* pl : planes) cv_b += static_cast<std::uint64_t>(pl->span);
    per_block_b = static_cast<std::uint64_t>(n) + 2 * cv_b;
  }
  st.cv_loads_total = groups * cv_group + blocks_b * cv_b;
  st.vload_total = groups * (row_pass + vec_loads + cv_group) + blocks_b * per_block_b;
  st.stores_total = volume / static_cast<std::uint64_t>(n) * (planes.empty() ? 1 : 2);

  std::uint64_t num = st.fmopa_per_subblock;
  std::uint64_t den = nonempty * static_cast<std::uint64_t>(n);
  if (den == 0) {
    num = 0;
    den = 1;
  }
  const std::uint64_t g = std::gcd(num == 0 ? den : num, den);
  st.per_vector_num = num / g;
  st.per_vector_den = den / g;
  return st;
}

CodegenResult generate_program(const StencilSpec& spec, const LineCover& cover,
                               const MachineConfig& cfg, const UnrollConfig& unroll,
                               const GridDims& dims) {
  cfg.validate();
  if (spec.dim != dims.dim || spec.order != dims.order) {
    throw ConfigError("grid does not match stencil rank or order");
  }
  const int n = cfg.lanes;
  const int r = spec.order;
  if (2 * r >= n) {
    throw ConfigError("vector lanes must exceed twice the stencil order");
  }
  const auto infos = classify_lines(spec, cover, n);
  const TilePlan plan = plan_tiles(dims, n, unroll);
  const RegPlan regs = make_reg_plan(infos, spec.dim, unroll);
  check_budget(regs, cfg);
  const MemoryLayout layout = plan_memory(dims, cover, n);

  bool has_plane = false;
  for (const LineInfo& li : infos) {
    if (li.cls == LineClass::plane && !li.empty) has_plane = true;
  }
  if (has_plane) require_pass_b_sizes(dims, n);

  CodegenResult result;
  result.layout = layout;
  result.cv_values.reserve(infos.size() * static_cast<std::size_t>(2 * n + 2 * r - 1));
  for (const LineInfo& li : infos) {
    const auto padded = padded_line_vector(li.weights, n);
    result.cv_values.insert(result.cv_values.end(), padded.begin(), padded.end());
  }

  Emitter em(infos, cfg, unroll, dims, layout, regs);
  em.run(plan);

  Program prog;
  prog.code = std::move(em.code);
  prog.meta.stencil_id = spec.name;
  prog.meta.cover_tag = std::string(to_string(cover.option));
  prog.meta.lanes = n;
  prog.meta.unroll_i = unroll.ui;
  prog.meta.unroll_j = unroll.uj;
  prog.meta.unroll_k = unroll.uk;
  prog.meta.a_base = layout.a_base;
  prog.meta.b_base = layout.b_base;
  prog.meta.cv_base = layout.cv_base;
  prog.meta.subblocks = dims.interior_volume() / (std::int64_t(n) * n);
  prog.meta.groups = static_cast<std::int64_t>(plan.groups.size());
  prog.meta.planes_per_group = (dims.dim == 3) ? n + 2 * r : 1;
  prog.meta.config_hash = to_hex64(fnv1a64(canonical_config(spec, cover, cfg, unroll, dims)));
  result.program = std::move(prog);
  return result;
}

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string to_hex64(std::uint64_t value) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

}  // namespace opsten
