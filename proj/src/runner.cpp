#include "opsten/runner.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstring>
#include <ctime>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "json.hpp"

#include "opsten/errors.hpp"
#include "opsten/oracle.hpp"

namespace opsten {
namespace {

using nlohmann::json;

std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::vector<double> parse_number_list(const std::string& text) {
  std::string cleaned = text;
  std::replace(cleaned.begin(), cleaned.end(), ',', ' ');
  std::istringstream in(cleaned);
  std::vector<double> out;
  double v = 0;
  while (in >> v) out.push_back(v);
  if (!in.eof()) {
    throw ConfigError("malformed number list: " + text);
  }
  return out;
}

std::string iso_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct Setup {
  StencilSpec spec;
  std::string source;  // "builtin" or "file"
  LineCover cover;
  GridDims dims;
  std::vector<std::int64_t> requested;  // pre-pad interior sizes
};

StencilSpec resolve_stencil(const RunConfig& cfg) {
  if (!cfg.spec_file.empty()) {
    if (!cfg.stencil.empty()) {
      throw ConfigError("provide either a builtin stencil or a spec file, not both");
    }
    return load_stencil_file(cfg.spec_file);
  }
  if (cfg.stencil.empty()) {
    throw ConfigError("no stencil given (use a builtin name or a spec file)");
  }
  return builtin_stencil(cfg.stencil, cfg.order);
}

LineCover resolve_cover(const RunConfig& cfg, const StencilSpec& spec) {
  if (cfg.cover == CoverOption::custom || !cfg.cover_file.empty()) {
    if (cfg.cover_file.empty()) {
      throw ConfigError("custom cover requires a cover file");
    }
    return load_cover_file(cfg.cover_file, spec);
  }
  return standard_cover(spec, cfg.cover);
}

bool cover_has_free_axis(const LineCover& cover, int axis) {
  for (const CoefficientLine& line : cover.lines) {
    if (line.axis_parallel() && line.free_axis() == axis) return true;
  }
  return false;
}

std::int64_t round_up(std::int64_t value, std::int64_t multiple) {
  return (value + multiple - 1) / multiple * multiple;
}

// Interior extents, padded up to the tile footprint when requested. Codegen
// itself rejects non-divisible sizes; padding is a front-end convenience.
GridDims resolve_dims(const RunConfig& cfg, const StencilSpec& spec, const LineCover& cover,
                      const std::vector<std::int64_t>& sizes) {
  const int dim = spec.dim;
  std::array<std::int64_t, 3> interior{1, 1, 1};
  if (sizes.size() == 1) {
    for (int a = 0; a < dim; ++a) interior[static_cast<std::size_t>(a)] = sizes[0];
  } else if (static_cast<int>(sizes.size()) == dim) {
    for (int a = 0; a < dim; ++a) interior[static_cast<std::size_t>(a)] = sizes[static_cast<std::size_t>(a)];
  } else {
    throw ConfigError("size takes one value or one per axis");
  }
  if (cfg.pad) {
    const std::int64_t n = cfg.machine.lanes;
    std::array<std::int64_t, 3> multiple{1, 1, 1};
    if (dim == 2) {
      multiple[0] = n;
      multiple[1] = n * cfg.unroll.uj;
    } else {
      multiple[0] = cfg.unroll.ui;
      if (cover_has_free_axis(cover, 0)) multiple[0] = std::lcm<std::int64_t>(multiple[0], n);
      multiple[1] = n;
      multiple[2] = n * cfg.unroll.uk;
    }
    for (int a = 0; a < dim; ++a) {
      interior[static_cast<std::size_t>(a)] =
          round_up(interior[static_cast<std::size_t>(a)], multiple[static_cast<std::size_t>(a)]);
    }
  }
  return make_dims(dim, spec.order, interior);
}

Setup prepare(const RunConfig& cfg, bool needs_sizes) {
  Setup s;
  s.spec = resolve_stencil(cfg);
  s.source = cfg.spec_file.empty() ? "builtin" : "file";
  s.cover = resolve_cover(cfg, s.spec);
  if (needs_sizes) {
    std::vector<std::int64_t> sizes = cfg.sizes;
    if (!cfg.grid_file.empty()) {
      if (cfg.pad) throw ConfigError("pad applies to generated grids, not grid files");
      const Grid a = read_grid(cfg.grid_file, s.spec.order);
      if (a.dims.dim != s.spec.dim) {
        throw ConfigError("grid file rank does not match the stencil");
      }
      sizes.clear();
      for (int ax = 0; ax < a.dims.dim; ++ax) sizes.push_back(a.dims.interior[static_cast<std::size_t>(ax)]);
    }
    if (sizes.empty()) throw ConfigError("interior size required");
    for (std::int64_t v : sizes) {
      if (v < 1) throw ConfigError("sizes must be positive");
    }
    s.requested = sizes;
    s.dims = resolve_dims(cfg, s.spec, s.cover, sizes);
  }
  return s;
}

json sizes_json(const std::vector<std::int64_t>& v) { return json(v); }

json dims_json(const GridDims& d) {
  json a = json::array();
  for (int ax = 0; ax < d.dim; ++ax) a.push_back(d.interior[static_cast<std::size_t>(ax)]);
  return a;
}

json config_json(const RunConfig& cfg, const Setup& s, const std::string& hash) {
  json j;
  j["mode"] = to_string(cfg.mode);
  json st;
  st["source"] = s.source;
  st["name"] = s.spec.name;
  st["dim"] = s.spec.dim;
  st["order"] = s.spec.order;
  st["shape"] = to_string(s.spec.shape);
  j["stencil"] = st;
  if (!s.requested.empty()) {
    j["sizes"] = sizes_json(s.requested);
    j["interior"] = dims_json(s.dims);
  }
  j["cover"] = to_string(s.cover.option);
  j["unroll"] = {{"ui", cfg.unroll.ui}, {"uj", cfg.unroll.uj}, {"uk", cfg.unroll.uk}};
  j["machine"] = {{"lanes", cfg.machine.lanes}, {"vregs", cfg.machine.vregs}, {"mregs", cfg.machine.mregs}};
  j["seed"] = cfg.seed;
  j["rng"] = kRngAlgorithm;
  if (!cfg.grid_file.empty()) j["grid_file"] = cfg.grid_file;
  if (cfg.pad) j["pad"] = true;
  if (!hash.empty()) j["config_hash"] = hash;
  return j;
}

json predicted_json(const PredictedStats& p) {
  json j;
  j["fmopa_per_subblock"] = p.fmopa_per_subblock;
  j["subblocks"] = p.subblocks;
  j["fmopa_total"] = p.fmopa_total;
  j["a_row_loads_per_plane"] = p.a_row_loads_per_plane;
  j["cv_loads_per_group"] = p.cv_loads_per_group;
  j["cv_loads_total"] = p.cv_loads_total;
  j["vload_total"] = p.vload_total;
  j["stores_total"] = p.stores_total;
  j["fmopa_per_output_vector"] = {{"num", p.per_vector_num}, {"den", p.per_vector_den}};
  return j;
}

json simulated_json(const ExecutionStats& st, int lanes) {
  json j;
  j["instr_total"] = st.instr_total;
  j["fmopa"] = st.fmopa;
  j["vload"] = st.vload;
  j["vload_strided"] = st.vload_strided;
  j["ext"] = st.ext;
  j["mova_row"] = st.mova_row;
  j["mova_col"] = st.mova_col;
  j["mstore_row"] = st.mstore_row;
  j["mzero"] = st.mzero;
  j["bytes_loaded"] = st.bytes_loaded;
  j["bytes_loaded_strided"] = st.bytes_loaded_strided;
  j["bytes_stored"] = st.bytes_stored;
  j["flops"] = st.flops(lanes);
  return j;
}

// The executable image is [A | B | coefficient buffer]; B starts zeroed and
// the coefficient windows are written once at setup.
std::vector<double> build_memory(const Grid& a, const CodegenResult& gen) {
  std::vector<double> mem(static_cast<std::size_t>(gen.layout.total), 0.0);
  std::copy(a.values.begin(), a.values.end(), mem.begin());
  std::copy(gen.cv_values.begin(), gen.cv_values.end(),
            mem.begin() + static_cast<std::ptrdiff_t>(gen.layout.cv_base));
  return mem;
}

Grid input_grid(const RunConfig& cfg, const Setup& s) {
  if (!cfg.grid_file.empty()) {
    Grid a = read_grid(cfg.grid_file, s.spec.order);
    if (a.dims.dim != s.dims.dim || a.dims.interior != s.dims.interior) {
      throw ConfigError("grid file extents do not match the requested size");
    }
    return a;
  }
  Grid a = make_grid(s.dims);
  fill_random(a, cfg.seed);
  return a;
}

std::string dump_report(const json& j) { return j.dump(2) + "\n"; }

RunResult run_verify(const RunConfig& cfg) {
  const Setup s = prepare(cfg, true);
  const CodegenResult gen = generate_program(s.spec, s.cover, cfg.machine, cfg.unroll, s.dims);
  validate_program(gen.program, cfg.machine);
  const PredictedStats predicted = predict_stats(s.spec, s.cover, cfg.machine, cfg.unroll, s.dims);

  const Grid a = input_grid(cfg, s);
  std::vector<double> mem = build_memory(a, gen);
  const ExecutionStats stats = execute(gen.program, mem, cfg.machine);

  Grid b_vm = make_grid(s.dims);
  std::copy(mem.begin() + static_cast<std::ptrdiff_t>(gen.layout.b_base),
            mem.begin() + static_cast<std::ptrdiff_t>(gen.layout.b_base + s.dims.padded_volume()),
            b_vm.values.begin());
  const Grid b_ref = gather_reference(s.spec, a);
  const CompareReport cmp = compare(b_vm, b_ref, cfg.rel_tol, cfg.abs_tol);

  json j;
  j["config"] = config_json(cfg, s, gen.program.meta.config_hash);
  j["predicted"] = predicted_json(predicted);
  j["simulated"] = simulated_json(stats, cfg.machine.lanes);
  json c;
  c["rel_tol"] = cmp.rel_tol;
  c["abs_tol"] = cmp.abs_tol;
  c["max_abs_err"] = cmp.max_abs_err;
  c["max_rel_err"] = cmp.max_rel_err;
  json worst = json::array();
  for (int ax = 0; ax < s.dims.dim; ++ax) worst.push_back(cmp.worst_index[static_cast<std::size_t>(ax)]);
  c["worst_index"] = worst;
  c["pass"] = cmp.pass;
  j["comparison"] = c;
  j["pass"] = cmp.pass;
  j["timestamp"] = iso_timestamp();

  RunResult res;
  res.text = dump_report(j);
  res.exit_code = cmp.pass ? 0 : static_cast<int>(ExitCode::verify_failed);
  return res;
}

RunResult run_count(const RunConfig& cfg) {
  const Setup s = prepare(cfg, true);
  const CodegenResult gen = generate_program(s.spec, s.cover, cfg.machine, cfg.unroll, s.dims);
  validate_program(gen.program, cfg.machine);
  const PredictedStats predicted = predict_stats(s.spec, s.cover, cfg.machine, cfg.unroll, s.dims);
  const Grid a = input_grid(cfg, s);
  std::vector<double> mem = build_memory(a, gen);
  const ExecutionStats stats = execute(gen.program, mem, cfg.machine);

  json j;
  j["config"] = config_json(cfg, s, gen.program.meta.config_hash);
  j["predicted"] = predicted_json(predicted);
  j["simulated"] = simulated_json(stats, cfg.machine.lanes);
  j["timestamp"] = iso_timestamp();
  return {0, dump_report(j)};
}

RunResult run_trace(const RunConfig& cfg) {
  const Setup s = prepare(cfg, true);
  const CodegenResult gen = generate_program(s.spec, s.cover, cfg.machine, cfg.unroll, s.dims);
  validate_program(gen.program, cfg.machine);
  return {0, format_trace(gen.program)};
}

// Per-line owned support extent along the free axis, in outer products per
// subblock: span = max - min + lanes.
int line_span(const std::vector<double>& weights, int lanes) {
  int lo = -1;
  int hi = -1;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] != 0.0) {
      if (lo < 0) lo = static_cast<int>(i);
      hi = static_cast<int>(i);
    }
  }
  return lo < 0 ? 0 : hi - lo + lanes;
}

RunResult run_cover(const RunConfig& cfg) {
  const Setup s = prepare(cfg, false);
  const int n = cfg.machine.lanes;
  json j;
  j["config"] = config_json(cfg, s, "");
  json lines = json::array();
  std::uint64_t per_subblock = 0;
  std::uint64_t nonempty = 0;
  for (std::size_t l = 0; l < s.cover.lines.size(); ++l) {
    const CoefficientLine& line = s.cover.lines[l];
    json e;
    json dir = json::array();
    json anc = json::array();
    for (int ax = 0; ax < s.spec.dim; ++ax) {
      dir.push_back(line.direction[static_cast<std::size_t>(ax)]);
      anc.push_back(line.anchor[static_cast<std::size_t>(ax)]);
    }
    e["direction"] = dir;
    e["anchor"] = anc;
    e["weights"] = s.cover.line_weights[l];
    const int span = line_span(s.cover.line_weights[l], n);
    e["fmopa_per_subblock"] = span;
    lines.push_back(e);
    per_subblock += static_cast<std::uint64_t>(span);
    if (span > 0) ++nonempty;
  }
  json cov;
  cov["option"] = to_string(s.cover.option);
  cov["lines"] = lines;
  cov["line_count"] = s.cover.lines.size();
  cov["fmopa_per_subblock"] = per_subblock;
  std::uint64_t num = per_subblock;
  std::uint64_t den = nonempty * static_cast<std::uint64_t>(n);
  if (den == 0) {
    num = 0;
    den = 1;
  }
  const std::uint64_t g = std::gcd(num == 0 ? den : num, den);
  cov["fmopa_per_output_vector"] = {{"num", num / g}, {"den", den / g}};
  j["cover"] = cov;
  j["timestamp"] = iso_timestamp();
  return {0, dump_report(j)};
}

RunResult run_gen(const RunConfig& cfg) {
  const Setup s = prepare(cfg, true);
  if (cfg.out_path.empty()) throw ConfigError("gen requires an output path");
  Grid a = make_grid(s.dims);
  if (cfg.fill == "random") {
    fill_random(a, cfg.seed);
  } else if (cfg.fill == "constant") {
    std::fill(a.values.begin(), a.values.end(), cfg.fill_value);
  } else {
    throw ConfigError("fill must be random or constant");
  }
  write_grid(cfg.out_path, a);
  json j;
  j["written"] = cfg.out_path;
  j["dim"] = s.dims.dim;
  j["order"] = s.dims.order;
  j["interior"] = dims_json(s.dims);
  j["fill"] = cfg.fill;
  if (cfg.fill == "constant") j["value"] = cfg.fill_value;
  if (cfg.fill == "random") {
    j["seed"] = cfg.seed;
    j["rng"] = kRngAlgorithm;
  }
  j["timestamp"] = iso_timestamp();
  return {0, dump_report(j)};
}

}  // namespace

RunMode mode_from_string(const std::string& name) {
  if (name == "verify") return RunMode::verify;
  if (name == "count") return RunMode::count;
  if (name == "trace") return RunMode::trace;
  if (name == "cover") return RunMode::cover;
  if (name == "gen") return RunMode::gen;
  throw ConfigError("unknown mode: " + name);
}

const char* to_string(RunMode mode) {
  switch (mode) {
    case RunMode::verify: return "verify";
    case RunMode::count: return "count";
    case RunMode::trace: return "trace";
    case RunMode::cover: return "cover";
    case RunMode::gen: return "gen";
  }
  return "verify";
}

RunResult run(const RunConfig& config) {
  config.machine.validate();
  switch (config.mode) {
    case RunMode::verify: return run_verify(config);
    case RunMode::count: return run_count(config);
    case RunMode::trace: return run_trace(config);
    case RunMode::cover: return run_cover(config);
    case RunMode::gen: return run_gen(config);
  }
  throw Error(ExitCode::internal, "unhandled mode");
}

StencilSpec load_stencil_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open stencil file: " + path);
  std::map<std::string, std::string> kv;
  std::string last;
  std::string line;
  while (std::getline(in, line)) {
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      if (last.empty()) throw ConfigError("stencil file line without key: " + line);
      kv[last] += " " + line;
      continue;
    }
    last = trim(line.substr(0, eq));
    if (last.empty()) throw ConfigError("stencil file line without key: " + line);
    kv[last] = trim(line.substr(eq + 1));
  }
  const auto need = [&](const char* key) -> const std::string& {
    const auto it = kv.find(key);
    if (it == kv.end()) throw ConfigError(std::string("stencil file missing field: ") + key);
    return it->second;
  };
  int dim = 0;
  int order = 0;
  try {
    dim = std::stoi(need("dim"));
    order = std::stoi(need("order"));
  } catch (const std::exception&) {
    throw ConfigError("stencil file dim/order must be integers");
  }
  const StencilShape shape = shape_from_string(need("shape"));
  const std::vector<double> coeffs = parse_number_list(need("coefficients"));
  std::string name = "custom";
  if (const auto it = kv.find("name"); it != kv.end() && !it->second.empty()) name = it->second;
  return make_stencil(dim, order, shape, coeffs, name);
}

LineCover load_cover_file(const std::string& path, const StencilSpec& spec) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open cover file: " + path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ConfigError("cover file is not valid json: " + std::string(e.what()));
  }
  if (!j.contains("lines") || !j["lines"].is_array()) {
    throw ConfigError("cover file needs a top-level \"lines\" array");
  }
  std::vector<CoefficientLine> lines;
  for (const json& e : j["lines"]) {
    std::array<int, 3> dir{0, 0, 0};
    std::array<int, 3> anchor{0, 0, 0};
    if (!e.contains("direction") || !e.contains("anchor")) {
      throw ConfigError("cover line needs direction and anchor");
    }
    const json& jd = e["direction"];
    const json& ja = e["anchor"];
    if (!jd.is_array() || !ja.is_array() || jd.size() < static_cast<std::size_t>(spec.dim) ||
        ja.size() < static_cast<std::size_t>(spec.dim)) {
      throw ConfigError("cover line direction/anchor need one entry per axis");
    }
    for (int ax = 0; ax < spec.dim; ++ax) {
      dir[static_cast<std::size_t>(ax)] = jd[static_cast<std::size_t>(ax)].get<int>();
      anchor[static_cast<std::size_t>(ax)] = ja[static_cast<std::size_t>(ax)].get<int>();
    }
    lines.push_back(general_line(dir, anchor));
  }
  const ScatterCoefficients sc = gather_to_scatter(spec);
  return assign_weights(lines, sc, spec.dim, spec.order, CoverOption::custom);
}

}  // namespace opsten
