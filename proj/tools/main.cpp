#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "opsten/errors.hpp"
#include "opsten/runner.hpp"

namespace {

// Flags shared by every run mode. Each subcommand gets its own copy bound to
// the same RunConfig; CLI11 config-file values fill in whatever flags omit.
void add_common_options(CLI::App* cmd, opsten::RunConfig& cfg, bool with_sizes) {
  cmd->add_option("--stencil", cfg.stencil, "builtin stencil id: box2d, star2d, box3d, star3d");
  cmd->add_option("--spec-file", cfg.spec_file, "custom stencil description file");
  cmd->add_option("--order", cfg.order, "stencil order r for builtin stencils")->check(CLI::PositiveNumber);
  cmd->add_option("--cover,--option", [&cfg](const CLI::results_t& res) {
        cfg.cover = opsten::cover_option_from_string(res[0]);
        return true;
      },
      "cover option: parallel, orthogonal, hybrid, minimal, custom")
      ->type_name("TEXT")
      ->expected(1);
  cmd->add_option("--cover-file", cfg.cover_file, "custom cover line list (json)");
  cmd->add_option("--lanes", cfg.machine.lanes, "vector lanes n")->check(CLI::PositiveNumber);
  cmd->add_option("--vregs", cfg.machine.vregs, "vector register count")->check(CLI::PositiveNumber);
  cmd->add_option("--mregs", cfg.machine.mregs, "matrix register count")->check(CLI::PositiveNumber);
  if (with_sizes) {
    cmd->add_option("--size", cfg.sizes, "interior extent, one value or one per axis");
    cmd->add_option("--unroll-j", cfg.unroll.uj, "2d unroll factor along axis 1")->check(CLI::PositiveNumber);
    cmd->add_option("--unroll-i", cfg.unroll.ui, "3d unroll factor along axis 0")->check(CLI::PositiveNumber);
    cmd->add_option("--unroll-k", cfg.unroll.uk, "3d unroll factor along axis 2")->check(CLI::PositiveNumber);
    cmd->add_option("--seed", cfg.seed, "rng seed for generated grids");
    cmd->add_flag("--pad", cfg.pad, "round interior sizes up to the tile footprint with zero fill");
  }
  cmd->add_option("--out", cfg.out_path, "write the result to this file instead of stdout");
}

int dispatch(const opsten::RunConfig& cfg) {
  const opsten::RunResult res = opsten::run(cfg);
  if (cfg.mode != opsten::RunMode::gen && !cfg.out_path.empty()) {
    std::ofstream out(cfg.out_path, std::ios::binary);
    if (!out) throw opsten::IoError("cannot open output file: " + cfg.out_path);
    out << res.text;
    if (!out) throw opsten::IoError("failed writing output file: " + cfg.out_path);
  } else {
    std::fputs(res.text.c_str(), stdout);
  }
  return res.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stencil-to-outer-product compiler and functional simulator"};
  app.require_subcommand(1);
  app.set_config("--config", "", "read defaults from an ini/toml file; flags override it");
  app.get_config_ptr()->configurable(false);

  opsten::RunConfig cfg;

  CLI::App* verify = app.add_subcommand("verify", "run the kernel and compare against the reference");
  add_common_options(verify, cfg, true);
  verify->add_option("--grid-file", cfg.grid_file, "load input grid A from a file");
  verify->add_option("--rel-tol", cfg.rel_tol, "relative tolerance");
  verify->add_option("--abs-tol", cfg.abs_tol, "absolute tolerance");

  CLI::App* count = app.add_subcommand("count", "predicted vs simulated instruction counters");
  add_common_options(count, cfg, true);
  count->add_option("--grid-file", cfg.grid_file, "load input grid A from a file");

  CLI::App* trace = app.add_subcommand("trace", "print the generated instruction sequence");
  add_common_options(trace, cfg, true);

  CLI::App* cover = app.add_subcommand("cover", "print the coefficient line cover and its costs");
  add_common_options(cover, cfg, false);

  CLI::App* gen = app.add_subcommand("gen", "write a grid file");
  add_common_options(gen, cfg, true);
  gen->add_option("--fill", cfg.fill, "random or constant");
  gen->add_option("--value", cfg.fill_value, "constant fill value");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(opsten::ExitCode::config);
  }

  try {
    if (verify->parsed()) cfg.mode = opsten::RunMode::verify;
    if (count->parsed()) cfg.mode = opsten::RunMode::count;
    if (trace->parsed()) cfg.mode = opsten::RunMode::trace;
    if (cover->parsed()) cfg.mode = opsten::RunMode::cover;
    if (gen->parsed()) cfg.mode = opsten::RunMode::gen;
    return dispatch(cfg);
  } catch (const opsten::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return static_cast<int>(opsten::ExitCode::internal);
  }
}
