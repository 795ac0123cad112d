#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "opsten/errors.hpp"

namespace opsten {

// Machine description: n-lane double vectors, n x n matrix accumulators.
struct MachineConfig {
  int lanes = 8;
  int vregs = 32;
  int mregs = 8;

  void validate() const {
    if (lanes < 1) throw ConfigError("machine needs at least one lane");
    if (vregs < 4) throw ConfigError("machine needs at least four vector registers");
    if (mregs < 1) throw ConfigError("machine needs at least one matrix register");
  }
};

// Instruction set:
//   VLOAD         v <- n contiguous doubles at addr
//   VLOAD_STRIDED v <- n doubles at addr, addr+stride, ...
//   EXT           v <- lanes k..k+n-1 of (va ++ vb), 0 <= k < n
//   MZERO         m <- 0
//   FMOPA         m[a][b] <- fma(va[a], vb[b], m[a][b])  (single rounding)
//   MOVA_ROW      m[row][*] <- v
//   MOVA_COL      v <- m[*][col]
//   MSTORE_ROW    memory[addr .. addr+n) <- m[row][*]
// Addresses index doubles in a flat memory image. Memory is written only by
// MSTORE_ROW.
enum class Opcode : std::uint8_t {
  vload,
  vload_strided,
  ext,
  mzero,
  fmopa,
  mova_row,
  mova_col,
  mstore_row,
};

const char* opcode_name(Opcode op);

struct Instruction {
  Opcode op{};
  std::int32_t dst = 0;  // vreg or mreg depending on op
  std::int32_t a = 0;    // source vreg / mreg
  std::int32_t b = 0;    // second source vreg
  std::int32_t k = 0;    // lane / row / column / stride
  std::int64_t addr = 0;

  static Instruction vload(int v, std::int64_t addr);
  static Instruction vload_strided(int v, std::int64_t addr, std::int64_t stride);
  static Instruction ext(int v, int va, int vb, int lane);
  static Instruction mzero(int m);
  static Instruction fmopa(int m, int va, int vb);
  static Instruction mova_row(int m, int row, int v);
  static Instruction mova_col(int v, int m, int col);
  static Instruction mstore_row(int m, int row, std::int64_t addr);

private:
  std::int64_t stride_ = 0;  // vload_strided only

public:
  std::int64_t stride() const { return stride_; }
};

struct ProgramMeta {
  std::string stencil_id;
  std::string cover_tag;
  int lanes = 0;
  int unroll_i = 1;
  int unroll_j = 1;
  int unroll_k = 1;
  std::int64_t a_base = 0;
  std::int64_t b_base = 0;
  std::int64_t cv_base = 0;
  std::int64_t subblocks = 0;   // output tiles of n*n interior points
  std::int64_t groups = 0;
  int planes_per_group = 0;     // free-axis trip count of the main pass
  std::string config_hash;
};

struct Program {
  std::vector<Instruction> code;
  ProgramMeta meta;
};

struct ExecutionStats {
  std::uint64_t instr_total = 0;
  std::uint64_t fmopa = 0;
  std::uint64_t vload = 0;
  std::uint64_t vload_strided = 0;
  std::uint64_t ext = 0;
  std::uint64_t mova_row = 0;
  std::uint64_t mova_col = 0;
  std::uint64_t mstore_row = 0;
  std::uint64_t mzero = 0;
  std::uint64_t bytes_loaded = 0;
  std::uint64_t bytes_loaded_strided = 0;
  std::uint64_t bytes_stored = 0;

  // 2 * n^2 floating ops per outer-product accumulate.
  std::uint64_t flops(int lanes) const {
    return fmopa * 2ull * static_cast<std::uint64_t>(lanes) * static_cast<std::uint64_t>(lanes);
  }
};

// Static checks (register indices, lanes, strides). Address bounds are checked
// during execution, where the memory image is known.
void validate_program(const Program& p, const MachineConfig& cfg);

// Runs the program over the flat memory image in-place. All registers start
// zeroed; execution is sequential and deterministic. Throws TrapError on
// out-of-range accesses.
ExecutionStats execute(const Program& p, std::vector<double>& memory, const MachineConfig& cfg);

// Reference semantics of one outer-product accumulate, exposed for tests:
// acc[a*n+b] = fma(u[a], v[b], acc[a*n+b]).
void fmopa_apply(std::span<double> acc, std::span<const double> u, std::span<const double> v);

std::string format_instruction(const Instruction& inst);
std::string format_trace(const Program& p);

}  // namespace opsten
