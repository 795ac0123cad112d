// Acceptance gate: seven independent checks, one verdict line each, nonzero
// exit when any of them fails. Everything below goes through the public
// library surface or the runner; nothing reaches into internals.

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "json.hpp"
#include "opsten/codegen.hpp"
#include "opsten/cover.hpp"
#include "opsten/errors.hpp"
#include "opsten/grid.hpp"
#include "opsten/oracle.hpp"
#include "opsten/runner.hpp"
#include "opsten/stencil.hpp"
#include "opsten/vm.hpp"

using namespace opsten;
using nlohmann::json;

namespace {

constexpr double kRel = 1e-12;
constexpr double kAbs = 1e-13;

struct Outcome {
  bool ok = true;
  std::string detail;
};

// Keeps the first failure; later ones would only repeat the story.
void fail(Outcome& o, const std::string& detail) {
  if (o.ok) {
    o.ok = false;
    o.detail = detail;
  }
}

struct VmRun {
  Grid a;
  Grid b;
  ExecutionStats stats;
  Program program;
  MemoryLayout layout;
};

VmRun run_vm(const StencilSpec& spec, const LineCover& cover, const MachineConfig& mc,
             const UnrollConfig& unroll, const GridDims& dims, std::uint64_t seed) {
  CodegenResult gen = generate_program(spec, cover, mc, unroll, dims);
  validate_program(gen.program, mc);

  VmRun r;
  r.a = make_grid(dims);
  fill_random(r.a, seed);
  std::vector<double> mem(static_cast<std::size_t>(gen.layout.total), 0.0);
  std::copy(r.a.values.begin(), r.a.values.end(), mem.begin());
  std::copy(gen.cv_values.begin(), gen.cv_values.end(),
            mem.begin() + static_cast<std::ptrdiff_t>(gen.layout.cv_base));
  r.stats = execute(gen.program, mem, mc);
  r.b = make_grid(dims);
  std::copy(mem.begin() + static_cast<std::ptrdiff_t>(gen.layout.b_base),
            mem.begin() + static_cast<std::ptrdiff_t>(gen.layout.b_base + dims.padded_volume()),
            r.b.values.begin());
  r.program = std::move(gen.program);
  r.layout = gen.layout;
  return r;
}

std::string cfg_label(const std::string& stencil, int order, CoverOption opt,
                      const std::array<std::int64_t, 3>& sizes, int dim, std::uint64_t seed) {
  std::string s = stencil + " r=" + std::to_string(order) + " " + to_string(opt) + " ";
  for (int a = 0; a < dim; ++a) s += (a ? "x" : "") + std::to_string(sizes[static_cast<std::size_t>(a)]);
  s += " seed=" + std::to_string(seed);
  return s;
}

// 1. Full correctness sweep through the runner at the default machine and
//    unroll, three seeds per configuration.
Outcome criterion_correctness(std::size_t& runs) {
  Outcome o;
  struct Case {
    const char* stencil;
    int order;
    CoverOption opt;
  };
  const std::vector<Case> cases2d = {
      {"box2d", 1, CoverOption::parallel},  {"box2d", 2, CoverOption::parallel},
      {"box2d", 3, CoverOption::parallel},  {"star2d", 1, CoverOption::parallel},
      {"star2d", 1, CoverOption::orthogonal}, {"star2d", 2, CoverOption::parallel},
      {"star2d", 2, CoverOption::orthogonal}, {"star2d", 3, CoverOption::parallel},
      {"star2d", 3, CoverOption::orthogonal},
  };
  const std::vector<Case> cases3d = {
      {"box3d", 1, CoverOption::parallel},    {"box3d", 2, CoverOption::parallel},
      {"star3d", 1, CoverOption::parallel},   {"star3d", 1, CoverOption::orthogonal},
      {"star3d", 1, CoverOption::hybrid},     {"star3d", 2, CoverOption::parallel},
      {"star3d", 2, CoverOption::orthogonal}, {"star3d", 2, CoverOption::hybrid},
      {"star3d", 3, CoverOption::parallel},   {"star3d", 3, CoverOption::orthogonal},
      {"star3d", 3, CoverOption::hybrid},
  };

  auto sweep = [&](const std::vector<Case>& cases, const std::vector<std::int64_t>& sizes) {
    for (const Case& c : cases) {
      for (std::int64_t size : sizes) {
        for (std::uint64_t seed = 1; seed <= 3; ++seed) {
          RunConfig cfg;
          cfg.mode = RunMode::verify;
          cfg.stencil = c.stencil;
          cfg.order = c.order;
          cfg.sizes = {size};
          cfg.cover = c.opt;
          cfg.seed = seed;
          cfg.rel_tol = kRel;
          cfg.abs_tol = kAbs;
          try {
            const RunResult res = run(cfg);
            ++runs;
            if (res.exit_code != 0) {
              fail(o, cfg_label(c.stencil, c.order, c.opt, {size, size, size}, 2, seed) +
                          " exit=" + std::to_string(res.exit_code));
            }
          } catch (const Error& e) {
            fail(o, cfg_label(c.stencil, c.order, c.opt, {size, size, size}, 2, seed) +
                        " threw: " + e.what());
          }
        }
      }
    }
  };
  sweep(cases2d, {64, 128});
  sweep(cases3d, {16, 32});
  return o;
}

// 2. Star outer-product counts per subblock, closed form and executed.
Outcome criterion_star_counts() {
  Outcome o;
  const MachineConfig mc;
  const std::uint64_t n = static_cast<std::uint64_t>(mc.lanes);

  struct Case {
    const char* stencil;
    CoverOption opt;
    std::uint64_t (*formula)(std::uint64_t, std::uint64_t);
    std::uint64_t fixed_r1;  // expected value at n=8, r=1
  };
  const Case cases[] = {
      {"star2d", CoverOption::parallel,
       [](std::uint64_t r, std::uint64_t n) { return (2 * r + n) + 2 * r * n; }, 26},
      {"star2d", CoverOption::orthogonal,
       [](std::uint64_t r, std::uint64_t n) { return 2 * (2 * r + n); }, 20},
      {"star3d", CoverOption::parallel,
       [](std::uint64_t r, std::uint64_t n) { return (2 * r + n) + 4 * r * n; }, 42},
      {"star3d", CoverOption::orthogonal,
       [](std::uint64_t r, std::uint64_t n) { return 3 * (2 * r + n); }, 30},
      {"star3d", CoverOption::hybrid,
       [](std::uint64_t r, std::uint64_t n) { return 2 * (2 * r + n) + 2 * r * n; }, 36},
  };

  for (const Case& c : cases) {
    for (int r = 1; r <= 3; ++r) {
      const StencilSpec spec = builtin_stencil(c.stencil, r);
      const LineCover cover = standard_cover(spec, c.opt);
      const GridDims dims = make_dims(spec.dim, r, {16, 16, 16});
      const PredictedStats p = predict_stats(spec, cover, mc, UnrollConfig{}, dims);
      const std::uint64_t want = c.formula(static_cast<std::uint64_t>(r), n);
      if (p.fmopa_per_subblock != want) {
        fail(o, std::string(c.stencil) + " r=" + std::to_string(r) + " " + to_string(c.opt) +
                    ": per-subblock " + std::to_string(p.fmopa_per_subblock) + " != " +
                    std::to_string(want));
        continue;
      }
      if (r == 1 && p.fmopa_per_subblock != c.fixed_r1) {
        fail(o, std::string(c.stencil) + " " + to_string(c.opt) + ": r=1 value " +
                    std::to_string(p.fmopa_per_subblock) + " != " + std::to_string(c.fixed_r1));
        continue;
      }
      const VmRun v = run_vm(spec, cover, mc, UnrollConfig{}, dims, 3);
      if (v.stats.fmopa != p.fmopa_total || p.fmopa_total != p.fmopa_per_subblock * p.subblocks) {
        fail(o, std::string(c.stencil) + " r=" + std::to_string(r) + " " + to_string(c.opt) +
                    ": executed " + std::to_string(v.stats.fmopa) + " vs predicted " +
                    std::to_string(p.fmopa_total));
      }
    }
  }
  return o;
}

// 3. Box counts: (2r+1)(2r+n) per subblock and the exact per-output-vector
//    rational 2r/n + 1, checked at two lane widths.
Outcome criterion_box_counts() {
  Outcome o;
  for (int lanes : {8, 16}) {
    MachineConfig mc;
    mc.lanes = lanes;
    const std::uint64_t n = static_cast<std::uint64_t>(lanes);
    for (int r = 1; r <= 3; ++r) {
      const StencilSpec spec = builtin_stencil("box2d", r);
      const LineCover cover = standard_cover(spec, CoverOption::parallel);
      const GridDims dims = make_dims(2, r, {2 * lanes, 2 * lanes, 1});
      const PredictedStats p = predict_stats(spec, cover, mc, UnrollConfig{}, dims);
      const std::uint64_t ru = static_cast<std::uint64_t>(r);
      const std::uint64_t want = (2 * ru + 1) * (2 * ru + n);
      if (p.fmopa_per_subblock != want) {
        fail(o, "box2d r=" + std::to_string(r) + " n=" + std::to_string(lanes) +
                    ": per-subblock " + std::to_string(p.fmopa_per_subblock) + " != " +
                    std::to_string(want));
        continue;
      }
      // num/den is stored reduced; cross-multiplying avoids touching floats.
      if (p.per_vector_num * n != p.per_vector_den * (2 * ru + n)) {
        fail(o, "box2d r=" + std::to_string(r) + " n=" + std::to_string(lanes) +
                    ": per-vector " + std::to_string(p.per_vector_num) + "/" +
                    std::to_string(p.per_vector_den) + " != (2r+n)/n");
        continue;
      }
      if (lanes == 8 && r == 1 && (p.per_vector_num != 5 || p.per_vector_den != 4)) {
        fail(o, "box2d r=1 n=8: per-vector not the reduced 5/4");
        continue;
      }
      const VmRun v = run_vm(spec, cover, mc, UnrollConfig{}, dims, 4);
      if (v.stats.fmopa != p.fmopa_total) {
        fail(o, "box2d r=" + std::to_string(r) + " n=" + std::to_string(lanes) +
                    ": executed fmopa " + std::to_string(v.stats.fmopa) + " != " +
                    std::to_string(p.fmopa_total));
      }
    }
  }
  return o;
}

// Exact minimum over row subsets; leftover nonzeros force their columns.
std::size_t brute_force_min_lines(const CoeffTensor& scatter) {
  const int e = scatter.extent();
  std::vector<std::pair<int, int>> nz;
  for (int i = 0; i < e; ++i)
    for (int j = 0; j < e; ++j)
      if (scatter.at({i, j, 0}) != 0.0) nz.emplace_back(i, j);
  if (nz.empty()) return 0;
  unsigned best = 2u * static_cast<unsigned>(e);
  for (unsigned mask = 0; mask < (1u << e); ++mask) {
    unsigned cols = 0;
    for (const auto& [i, j] : nz)
      if (!(mask & (1u << i))) cols |= 1u << j;
    best = std::min(best, static_cast<unsigned>(std::popcount(mask) + std::popcount(cols)));
  }
  return best;
}

// 4. Minimal cover sizes against brute force, plus the matching identity.
Outcome criterion_cover_minimality(std::size_t& instances) {
  Outcome o;

  auto check_spec = [&](const StencilSpec& spec, const std::string& label,
                        std::size_t expect = static_cast<std::size_t>(-1)) {
    const ScatterCoefficients sc = gather_to_scatter(spec);
    const std::size_t brute = brute_force_min_lines(sc.tensor);
    const LineCover cover = minimal_axis_parallel_cover(spec, sc);
    const BipartiteGraph g = coefficient_graph(sc.tensor);
    const std::size_t matching = maximum_matching(g).size();
    const VertexCover vc = minimum_vertex_cover(g);
    ++instances;
    if (cover.lines.size() != brute)
      fail(o, label + ": minimal cover " + std::to_string(cover.lines.size()) +
                  " != brute-force " + std::to_string(brute));
    else if (vc.size() != matching)
      fail(o, label + ": vertex cover " + std::to_string(vc.size()) + " != matching " +
                  std::to_string(matching));
    else if (expect != static_cast<std::size_t>(-1) && brute != expect)
      fail(o, label + ": expected " + std::to_string(expect) + " lines, brute-force says " +
                  std::to_string(brute));
  };

  check_spec(builtin_stencil("star2d", 1), "five-point star", 2);
  check_spec(make_stencil(2, 1, StencilShape::custom, {1, 0, 2, 0, 3, 0, 4, 0, 5}, "xcross"),
             "corner cross", 3);
  for (int r = 1; r <= 4 && o.ok; ++r) {
    const int e = 2 * r + 1;
    check_spec(make_stencil(2, r, StencilShape::custom,
                            std::vector<double>(static_cast<std::size_t>(e * e), 1.0), "dense"),
               "dense box r=" + std::to_string(r), static_cast<std::size_t>(e));
  }

  for (int k = 0; k < 200 && o.ok; ++k) {
    const int r = 1 + k % 4;
    const int e = 2 * r + 1;
    SplitMix64 rng(1000 + static_cast<std::uint64_t>(k));
    const std::uint64_t density = 15 + (static_cast<std::uint64_t>(k) * 13) % 70;
    std::vector<double> values(static_cast<std::size_t>(e * e), 0.0);
    for (double& v : values)
      if (rng.next() % 100 < density) v = 0.5 + 0.5 * (rng.uniform_pm1() + 1.0);
    values[static_cast<std::size_t>(e * e / 2)] = 1.0;  // at least one nonzero
    check_spec(make_stencil(2, r, StencilShape::custom, values, "random"),
               "random pattern " + std::to_string(k));
  }
  return o;
}

// 5. Plane unrolling reuses loaded input rows: traffic falls strictly with ui
//    while the output image stays bit-identical.
Outcome criterion_reuse() {
  Outcome o;
  const StencilSpec spec = builtin_stencil("box3d", 1);
  const LineCover cover = standard_cover(spec, CoverOption::parallel);
  const GridDims dims = make_dims(3, 1, {32, 32, 32});
  const MachineConfig mc;
  const Grid ref = [&] {
    Grid a = make_grid(dims);
    fill_random(a, 11);
    return gather_reference(spec, a);
  }();

  std::vector<std::uint64_t> bytes;
  std::vector<std::vector<double>> images;
  for (int ui : {1, 2, 4}) {
    UnrollConfig u;
    u.ui = ui;
    const PredictedStats p = predict_stats(spec, cover, mc, u, dims);
    if (p.a_row_loads_per_plane != static_cast<std::uint64_t>(ui + 2)) {
      fail(o, "ui=" + std::to_string(ui) + ": predicted row loads per plane " +
                  std::to_string(p.a_row_loads_per_plane) + " != ui+2r");
      break;
    }
    const VmRun v = run_vm(spec, cover, mc, u, dims, 11);
    if (!compare(v.b, ref, kRel, kAbs).pass) {
      fail(o, "ui=" + std::to_string(ui) + ": output does not verify");
      break;
    }
    std::uint64_t a_vloads = 0;
    for (const Instruction& inst : v.program.code)
      if (inst.op == Opcode::vload && inst.addr < v.layout.b_base) ++a_vloads;
    // One input row segment spans n+2r doubles, i.e. ceil((n+2r)/n) vector loads.
    const std::uint64_t n = static_cast<std::uint64_t>(mc.lanes);
    const std::uint64_t loads_per_row = (n + 2 + n - 1) / n;
    const std::uint64_t slots = static_cast<std::uint64_t>(v.program.meta.groups) *
                                static_cast<std::uint64_t>(v.program.meta.planes_per_group);
    if (a_vloads != slots * loads_per_row * static_cast<std::uint64_t>(ui + 2)) {
      fail(o, "ui=" + std::to_string(ui) + ": " + std::to_string(a_vloads) +
                  " input row loads over " + std::to_string(slots) + " plane visits != ui+2r");
      break;
    }
    bytes.push_back(v.stats.bytes_loaded);
    images.push_back(v.b.values);
  }
  if (o.ok) {
    if (!(bytes[2] < bytes[1] && bytes[1] < bytes[0]))
      fail(o, "bytes loaded not strictly decreasing: " + std::to_string(bytes[0]) + ", " +
                  std::to_string(bytes[1]) + ", " + std::to_string(bytes[2]));
    else if (images[0] != images[1] || images[1] != images[2])
      fail(o, "unrolled outputs are not bit-identical");
  }
  return o;
}

double& interior_at(Grid& g, std::int64_t i, std::int64_t j, std::int64_t k) {
  const int r = g.dims.order;
  const std::int64_t flat = g.dims.dim == 2 ? g.dims.flat(i + r, j + r)
                                            : g.dims.flat(i + r, j + r, k + r);
  return g.values[static_cast<std::size_t>(flat)];
}

// The response to a unit impulse is the scatter tensor stamped around the
// impulse point; every oracle must reproduce it without rounding.
bool impulse_stamp_exact(const StencilSpec& spec, const GridDims& dims,
                         const std::array<std::int64_t, 3>& q, const Grid& out) {
  const ScatterCoefficients sc = gather_to_scatter(spec);
  const int r = spec.order;
  Grid expect = make_grid(dims);
  const int e = 2 * r + 1;
  for (int di = 0; di < e; ++di) {
    for (int dj = 0; dj < e; ++dj) {
      for (int dk = 0; dk < (spec.dim == 3 ? e : 1); ++dk) {
        const double w = sc.tensor.at({di, dj, dk});
        interior_at(expect, q[0] + di - r, q[1] + dj - r, spec.dim == 3 ? q[2] + dk - r : 0) = w;
      }
    }
  }
  return out.values == expect.values;
}

// 6. Oracle triangle: gather, scatter, and per-line references agree for every
//    standard cover, a diagonal cover, and bit-exactly on impulses.
Outcome criterion_oracles() {
  Outcome o;
  struct Case {
    const char* stencil;
    int order;
    CoverOption opt;
  };
  const Case cases[] = {
      {"box2d", 1, CoverOption::parallel},    {"box2d", 1, CoverOption::minimal},
      {"box2d", 2, CoverOption::parallel},    {"box2d", 2, CoverOption::minimal},
      {"star2d", 1, CoverOption::parallel},   {"star2d", 1, CoverOption::orthogonal},
      {"star2d", 1, CoverOption::minimal},    {"star2d", 2, CoverOption::parallel},
      {"star2d", 2, CoverOption::orthogonal}, {"star2d", 2, CoverOption::minimal},
      {"box3d", 1, CoverOption::parallel},    {"box3d", 2, CoverOption::parallel},
      {"star3d", 1, CoverOption::parallel},   {"star3d", 1, CoverOption::orthogonal},
      {"star3d", 1, CoverOption::hybrid},     {"star3d", 2, CoverOption::parallel},
      {"star3d", 2, CoverOption::orthogonal}, {"star3d", 2, CoverOption::hybrid},
  };
  for (const Case& c : cases) {
    const StencilSpec spec = builtin_stencil(c.stencil, c.order);
    const GridDims dims = make_dims(spec.dim, c.order, {spec.dim == 2 ? 32 : 16, spec.dim == 2 ? 32 : 16, 16});
    Grid a = make_grid(dims);
    fill_random(a, 21);
    const Grid g = gather_reference(spec, a);
    const Grid s = scatter_reference(spec, a);
    const Grid l = cls_reference(spec, standard_cover(spec, c.opt), a);
    const std::string label = std::string(c.stencil) + " r=" + std::to_string(c.order) + " " +
                              to_string(c.opt);
    if (!compare(g, s, kRel, kAbs).pass) fail(o, label + ": gather vs scatter");
    if (!compare(g, l, kRel, kAbs).pass) fail(o, label + ": gather vs per-line");
  }

  // Diagonal two-line cover of the corner-cross pattern.
  {
    const StencilSpec x =
        make_stencil(2, 1, StencilShape::custom, {1, 0, 2, 0, 3, 0, 4, 0, 5}, "xcross");
    const std::vector<CoefficientLine> lines = {general_line({1, 1, 0}, {0, 0, 0}),
                                                general_line({1, -1, 0}, {0, 2, 0})};
    const LineCover cover = assign_weights(lines, gather_to_scatter(x), 2, 1);
    const GridDims dims = make_dims(2, 1, {32, 32, 1});
    Grid a = make_grid(dims);
    fill_random(a, 22);
    if (!compare(gather_reference(x, a), cls_reference(x, cover, a), kRel, kAbs).pass)
      fail(o, "diagonal cover of the corner cross disagrees with gather");
  }

  // Impulse responses, bit for bit, through all three references.
  {
    const StencilSpec spec = builtin_stencil("box2d", 2);
    const GridDims dims = make_dims(2, 2, {32, 32, 1});
    Grid a = make_grid(dims);
    interior_at(a, 7, 6, 0) = 1.0;
    if (!impulse_stamp_exact(spec, dims, {7, 6, 0}, gather_reference(spec, a)))
      fail(o, "2d gather impulse stamp is not exact");
    if (!impulse_stamp_exact(spec, dims, {7, 6, 0}, scatter_reference(spec, a)))
      fail(o, "2d scatter impulse stamp is not exact");
    if (!impulse_stamp_exact(spec, dims, {7, 6, 0},
                             cls_reference(spec, standard_cover(spec, CoverOption::parallel), a)))
      fail(o, "2d per-line impulse stamp is not exact");
  }
  {
    const StencilSpec spec = builtin_stencil("star3d", 1);
    const GridDims dims = make_dims(3, 1, {16, 16, 16});
    Grid a = make_grid(dims);
    interior_at(a, 5, 4, 3) = 1.0;
    if (!impulse_stamp_exact(spec, dims, {5, 4, 3}, gather_reference(spec, a)))
      fail(o, "3d gather impulse stamp is not exact");
    if (!impulse_stamp_exact(spec, dims, {5, 4, 3},
                             cls_reference(spec, standard_cover(spec, CoverOption::hybrid), a)))
      fail(o, "3d per-line impulse stamp is not exact");
  }
  return o;
}

// 7. Reports are reproducible once the timestamp is dropped.
Outcome criterion_determinism() {
  Outcome o;
  RunConfig cfg;
  cfg.mode = RunMode::verify;
  cfg.stencil = "star3d";
  cfg.order = 1;
  cfg.sizes = {16};
  cfg.cover = CoverOption::hybrid;
  cfg.unroll.ui = 2;
  cfg.seed = 5;

  const RunResult r1 = run(cfg);
  const RunResult r2 = run(cfg);
  if (r1.exit_code != 0 || r2.exit_code != 0) {
    fail(o, "verify did not pass");
    return o;
  }
  json a = json::parse(r1.text);
  json b = json::parse(r2.text);
  a.erase("timestamp");
  b.erase("timestamp");
  if (a.dump(2) != b.dump(2)) fail(o, "reports differ beyond the timestamp");

  cfg.seed = 6;
  json c = json::parse(run(cfg).text);
  c.erase("timestamp");
  if (a.dump(2) == c.dump(2)) fail(o, "different seeds produced identical reports");
  return o;
}

int report(int id, const std::string& label, const Outcome& o) {
  if (o.ok)
    std::printf("[PASS] criterion %d: %s\n", id, label.c_str());
  else
    std::printf("[FAIL] criterion %d: %s: %s\n", id, label.c_str(), o.detail.c_str());
  return o.ok ? 0 : 1;
}

}  // namespace

int main() {
  int failures = 0;

  std::size_t runs = 0;
  const Outcome c1 = criterion_correctness(runs);
  failures += report(1, "correctness sweep, " + std::to_string(runs) +
                            " verify runs within rel 1e-12 / abs 1e-13", c1);

  failures += report(2, "star outer-product counts match the closed forms (26/20/42/30/36 at r=1)",
                     criterion_star_counts());

  failures += report(3, "box counts equal (2r+1)(2r+n) with per-vector rational 2r/n+1",
                     criterion_box_counts());

  std::size_t instances = 0;
  const Outcome c4 = criterion_cover_minimality(instances);
  failures += report(4, "minimal covers match brute force on " + std::to_string(instances) +
                            " patterns with |cover| = |matching|", c4);

  failures += report(5, "plane unrolling cuts loaded bytes with bit-identical verified output",
                     criterion_reuse());

  failures += report(6, "gather, scatter, and per-line oracles agree; impulse stamps bit-exact",
                     criterion_oracles());

  failures += report(7, "repeated runs emit byte-identical reports modulo timestamp",
                     criterion_determinism());

  return failures == 0 ? 0 : 1;
}
