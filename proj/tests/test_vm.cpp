#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdint>
#include <vector>

#include "opsten/errors.hpp"
#include "opsten/grid.hpp"
#include "opsten/vm.hpp"

using namespace opsten;

namespace {

std::vector<double> random_values(std::size_t count, std::uint64_t seed) {
  SplitMix64 rng(seed);
  std::vector<double> v(count);
  for (auto& x : v) x = rng.uniform_pm1();
  return v;
}

Program wrap(std::vector<Instruction> code) {
  Program p;
  p.code = std::move(code);
  return p;
}

}  // namespace

TEST_CASE("outer product accumulate places unit products") {
  const std::size_t n = 8;
  std::vector<double> acc(n * n, 0.0), u(n, 0.0), v(n, 0.0);
  u[2] = 1.0;
  v[5] = 1.0;
  fmopa_apply(acc, u, v);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b) CHECK(acc[a * n + b] == ((a == 2 && b == 5) ? 1.0 : 0.0));
}

TEST_CASE("outer product of ones fills the accumulator") {
  const std::size_t n = 8;
  std::vector<double> acc(n * n, 0.0), ones(n, 1.0);
  fmopa_apply(acc, ones, ones);
  for (double x : acc) CHECK(x == 1.0);
}

TEST_CASE("outer product matches the scalar fma loop bit for bit") {
  const std::size_t n = 4;
  std::vector<double> acc = random_values(n * n, 1);
  std::vector<double> u = random_values(n, 2);
  std::vector<double> v = random_values(n, 3);
  std::vector<double> want = acc;
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b) want[a * n + b] = std::fma(u[a], v[b], want[a * n + b]);
  fmopa_apply(acc, u, v);
  CHECK(acc == want);
}

TEST_CASE("empty program leaves memory and counters untouched") {
  MachineConfig cfg;
  std::vector<double> mem = random_values(64, 4);
  std::vector<double> before = mem;
  ExecutionStats st = execute(wrap({}), mem, cfg);
  CHECK(mem == before);
  CHECK(st.instr_total == 0);
  CHECK(st.fmopa == 0);
  CHECK(st.bytes_loaded == 0);
  CHECK(st.bytes_stored == 0);
  CHECK(st.flops(cfg.lanes) == 0);
}

TEST_CASE("two aligned loads and an extract produce a shifted window") {
  MachineConfig cfg;
  const int n = cfg.lanes;
  std::vector<double> mem = random_values(static_cast<std::size_t>(3 * n), 5);
  for (int k = 0; k < n; ++k) {
    Program p = wrap({
        Instruction::vload(0, 0),
        Instruction::vload(1, n),
        Instruction::ext(2, 0, 1, k),
        Instruction::mova_row(0, 0, 2),
        Instruction::mstore_row(0, 0, 2 * n),
    });
    std::vector<double> m = mem;
    execute(p, m, cfg);
    for (int b = 0; b < n; ++b)
      CHECK(m[static_cast<std::size_t>(2 * n + b)] == mem[static_cast<std::size_t>(k + b)]);
  }
}

TEST_CASE("extract tolerates destination aliasing a source") {
  MachineConfig cfg;
  const int n = cfg.lanes;
  std::vector<double> mem = random_values(static_cast<std::size_t>(3 * n), 6);
  Program p = wrap({
      Instruction::vload(0, 0),
      Instruction::vload(1, n),
      Instruction::ext(0, 0, 1, 3),  // overwrite the first source in place
      Instruction::mova_row(0, 0, 0),
      Instruction::mstore_row(0, 0, 2 * n),
  });
  execute(p, mem, cfg);
  for (int b = 0; b < n; ++b)
    CHECK(mem[static_cast<std::size_t>(2 * n + b)] == mem[static_cast<std::size_t>(3 + b)]);
}

TEST_CASE("strided load gathers spaced elements and counts separately") {
  MachineConfig cfg;
  const int n = cfg.lanes;
  const std::int64_t stride = 3;
  std::vector<double> mem = random_values(static_cast<std::size_t>(n * stride + n), 7);
  std::vector<double> src = mem;
  Program p = wrap({
      Instruction::vload_strided(0, 1, stride),
      Instruction::mova_row(0, 0, 0),
      Instruction::mstore_row(0, 0, n * stride),
  });
  ExecutionStats st = execute(p, mem, cfg);
  for (int b = 0; b < n; ++b)
    CHECK(mem[static_cast<std::size_t>(n * stride + b)] == src[static_cast<std::size_t>(1 + b * stride)]);
  CHECK(st.vload_strided == 1);
  CHECK(st.bytes_loaded_strided == static_cast<std::uint64_t>(n) * 8);
  CHECK(st.bytes_loaded == 0);
}

TEST_CASE("matrix columns read back the transpose of staged rows") {
  MachineConfig cfg;
  const int n = cfg.lanes;
  std::vector<double> mem = random_values(static_cast<std::size_t>(n * n + n), 8);
  std::vector<double> src = mem;
  std::vector<Instruction> code;
  for (int row = 0; row < n; ++row) {
    code.push_back(Instruction::vload(0, row * n));
    code.push_back(Instruction::mova_row(0, row, 0));
  }
  const int col = 5;
  code.push_back(Instruction::mova_col(1, 0, col));
  code.push_back(Instruction::mova_row(1, 0, 1));
  code.push_back(Instruction::mstore_row(1, 0, n * n));
  execute(wrap(std::move(code)), mem, cfg);
  for (int a = 0; a < n; ++a)
    CHECK(mem[static_cast<std::size_t>(n * n + a)] == src[static_cast<std::size_t>(a * n + col)]);
}

TEST_CASE("accumulator zeroing discards prior products") {
  MachineConfig cfg;
  const int n = cfg.lanes;
  std::vector<double> mem = random_values(static_cast<std::size_t>(2 * n), 9);
  std::vector<Instruction> code = {
      Instruction::vload(0, 0),
      Instruction::vload(1, 0),
      Instruction::fmopa(0, 0, 1),
      Instruction::mzero(0),
  };
  for (int row = 0; row < n; ++row) code.push_back(Instruction::mstore_row(0, row, n));
  execute(wrap(std::move(code)), mem, cfg);
  for (int b = 0; b < n; ++b) CHECK(mem[static_cast<std::size_t>(n + b)] == 0.0);
}

TEST_CASE("execution is deterministic") {
  MachineConfig cfg;
  const int n = cfg.lanes;
  std::vector<double> mem1 = random_values(static_cast<std::size_t>(4 * n), 10);
  std::vector<double> mem2 = mem1;
  Program p = wrap({
      Instruction::vload(0, 0),
      Instruction::vload(1, n),
      Instruction::fmopa(0, 0, 1),
      Instruction::fmopa(0, 1, 1),
      Instruction::mstore_row(0, 2, 3 * n),
  });
  ExecutionStats s1 = execute(p, mem1, cfg);
  ExecutionStats s2 = execute(p, mem2, cfg);
  CHECK(mem1 == mem2);
  CHECK(s1.fmopa == s2.fmopa);
  CHECK(s1.instr_total == s2.instr_total);
}

TEST_CASE("only row stores write memory") {
  MachineConfig cfg;
  const int n = cfg.lanes;
  std::vector<double> mem = random_values(static_cast<std::size_t>(6 * n), 11);
  std::vector<double> before = mem;
  Program p = wrap({
      Instruction::vload(0, 0),
      Instruction::vload_strided(1, 0, 2),
      Instruction::ext(2, 0, 1, 4),
      Instruction::mzero(0),
      Instruction::fmopa(0, 0, 1),
      Instruction::mova_row(1, 0, 2),
      Instruction::mova_col(3, 0, 0),
      Instruction::mstore_row(0, 0, 5 * n),
  });
  execute(p, mem, cfg);
  for (std::size_t i = 0; i < mem.size(); ++i) {
    if (i >= static_cast<std::size_t>(5 * n)) continue;
    CHECK(mem[i] == before[i]);
  }
}

TEST_CASE("counters track every executed instruction") {
  MachineConfig cfg;
  const int n = cfg.lanes;
  std::vector<double> mem(static_cast<std::size_t>(8 * n), 1.0);
  Program p = wrap({
      Instruction::vload(0, 0),
      Instruction::vload(1, n),
      Instruction::vload_strided(2, 0, 2),
      Instruction::ext(3, 0, 1, 1),
      Instruction::mzero(0),
      Instruction::fmopa(0, 0, 1),
      Instruction::fmopa(0, 2, 3),
      Instruction::fmopa(1, 0, 0),
      Instruction::mova_row(1, 3, 2),
      Instruction::mova_col(4, 0, 2),
      Instruction::mstore_row(0, 0, 6 * n),
      Instruction::mstore_row(1, 1, 7 * n),
  });
  ExecutionStats st = execute(p, mem, cfg);
  CHECK(st.instr_total == 12);
  CHECK(st.vload == 2);
  CHECK(st.vload_strided == 1);
  CHECK(st.ext == 1);
  CHECK(st.mzero == 1);
  CHECK(st.fmopa == 3);
  CHECK(st.mova_row == 1);
  CHECK(st.mova_col == 1);
  CHECK(st.mstore_row == 2);
  CHECK(st.bytes_loaded == static_cast<std::uint64_t>(2 * n) * 8);
  CHECK(st.bytes_loaded_strided == static_cast<std::uint64_t>(n) * 8);
  CHECK(st.bytes_stored == static_cast<std::uint64_t>(2 * n) * 8);
  CHECK(st.flops(n) == 3ull * 2 * static_cast<std::uint64_t>(n) * static_cast<std::uint64_t>(n));
}

TEST_CASE("narrow machines are supported") {
  MachineConfig cfg;
  cfg.lanes = 4;
  std::vector<double> mem = random_values(16, 12);
  std::vector<double> src = mem;
  Program p = wrap({
      Instruction::vload(0, 2),
      Instruction::mova_row(0, 3, 0),
      Instruction::mstore_row(0, 3, 8),
  });
  execute(p, mem, cfg);
  for (int b = 0; b < 4; ++b) CHECK(mem[static_cast<std::size_t>(8 + b)] == src[static_cast<std::size_t>(2 + b)]);
}

TEST_CASE("traps report the offending instruction") {
  MachineConfig cfg;
  const int n = cfg.lanes;
  std::vector<double> mem(static_cast<std::size_t>(2 * n), 0.0);

  auto trap_index = [&](Program p) -> std::size_t {
    try {
      execute(p, mem, cfg);
    } catch (const TrapError& e) {
      return e.instruction_index();
    }
    return static_cast<std::size_t>(-1);
  };

  CHECK(trap_index(wrap({Instruction::vload(0, 0), Instruction::vload(0, 2 * n - 1)})) == 1);
  CHECK(trap_index(wrap({Instruction::mstore_row(0, 0, 2 * n - 3)})) == 0);
  CHECK(trap_index(wrap({Instruction::vload_strided(0, 0, n)})) == 0);
  CHECK(trap_index(wrap({Instruction::vload(99, 0)})) == 0);
  CHECK(trap_index(wrap({Instruction::mzero(0), Instruction::fmopa(8, 0, 1)})) == 1);
  CHECK(trap_index(wrap({Instruction::ext(0, 0, 1, n)})) == 0);
  CHECK(trap_index(wrap({Instruction::vload(0, -1)})) == 0);
  CHECK(trap_index(wrap({Instruction::vload_strided(0, 0, 0)})) == 0);
  CHECK(trap_index(wrap({Instruction::mova_row(0, n, 0)})) == 0);
}

TEST_CASE("machine limits are validated") {
  MachineConfig bad;
  bad.lanes = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = MachineConfig{};
  bad.vregs = 3;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = MachineConfig{};
  bad.mregs = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  CHECK_NOTHROW(MachineConfig{}.validate());
}

TEST_CASE("trace lines use uppercase opcodes with comma separated operands") {
  CHECK(format_instruction(Instruction::fmopa(0, 3, 7)) == "FMOPA m0, v3, v7");
  CHECK(format_instruction(Instruction::vload(1, 42)) == "VLOAD v1, 42");
  CHECK(format_instruction(Instruction::vload_strided(0, 8, 3)) == "VLOAD_STRIDED v0, 8, 3");
  CHECK(format_instruction(Instruction::ext(2, 0, 1, 3)) == "EXT v2, v0, v1, 3");
  CHECK(format_instruction(Instruction::mzero(5)) == "MZERO m5");
  CHECK(format_instruction(Instruction::mova_row(1, 2, 4)) == "MOVA_ROW m1, 2, v4");
  CHECK(format_instruction(Instruction::mova_col(5, 1, 6)) == "MOVA_COL v5, m1, 6");
  CHECK(format_instruction(Instruction::mstore_row(0, 1, 100)) == "MSTORE_ROW m0, 1, 100");

  Program p = wrap({Instruction::mzero(0), Instruction::fmopa(0, 1, 2)});
  CHECK(format_trace(p) == "MZERO m0\nFMOPA m0, v1, v2\n");
}
