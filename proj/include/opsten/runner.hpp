#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "opsten/codegen.hpp"
#include "opsten/cover.hpp"
#include "opsten/grid.hpp"
#include "opsten/stencil.hpp"
#include "opsten/vm.hpp"

namespace opsten {

enum class RunMode { verify, count, trace, cover, gen };

RunMode mode_from_string(const std::string& name);
const char* to_string(RunMode mode);

struct RunConfig {
  RunMode mode = RunMode::verify;
  std::string stencil;          // builtin id; empty when spec_file is set
  std::string spec_file;        // custom stencil description file
  int order = 1;                // builtin stencil order
  std::vector<std::int64_t> sizes;  // interior extents; one value broadcasts
  CoverOption cover = CoverOption::parallel;
  std::string cover_file;       // custom cover line list (json)
  UnrollConfig unroll;
  MachineConfig machine;
  std::uint64_t seed = 1;
  std::string grid_file;        // load A from file instead of generating it
  bool pad = false;             // round interior sizes up to the tile footprint
  double rel_tol = 1e-12;
  double abs_tol = 1e-13;
  std::string fill = "random";  // gen mode: random | constant
  double fill_value = 0.0;
  std::string out_path;         // gen target; other modes return text to the caller
};

struct RunResult {
  int exit_code = 0;  // 0, or the dedicated verification-failure code
  std::string text;   // report json, trace text, or gen summary
};

// Executes one request. Configuration and environment problems surface as
// Error subclasses carrying their exit codes; a run that completes but fails
// verification returns the failure code in the result instead of throwing.
RunResult run(const RunConfig& config);

// Key-value stencil description: dim, order, shape, name (optional), and a
// row-major gather coefficient list of length (2r+1)^dim.
StencilSpec load_stencil_file(const std::string& path);

// Json cover description {"lines": [{"direction": [...], "anchor": [...]}]}
// weighted against the stencil's scatter coefficients.
LineCover load_cover_file(const std::string& path, const StencilSpec& spec);

}  // namespace opsten
