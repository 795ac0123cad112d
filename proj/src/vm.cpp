#include "opsten/vm.hpp"

#include <cmath>
#include <sstream>

namespace opsten {

const char* opcode_name(Opcode op) {
  switch (op) {
    case Opcode::vload: return "VLOAD";
    case Opcode::vload_strided: return "VLOAD_STRIDED";
    case Opcode::ext: return "EXT";
    case Opcode::mzero: return "MZERO";
    case Opcode::fmopa: return "FMOPA";
    case Opcode::mova_row: return "MOVA_ROW";
    case Opcode::mova_col: return "MOVA_COL";
    case Opcode::mstore_row: return "MSTORE_ROW";
  }
  return "?";
}

Instruction Instruction::vload(int v, std::int64_t addr) {
  Instruction i;
  i.op = Opcode::vload;
  i.dst = v;
  i.addr = addr;
  return i;
}

Instruction Instruction::vload_strided(int v, std::int64_t addr, std::int64_t stride) {
  Instruction i;
  i.op = Opcode::vload_strided;
  i.dst = v;
  i.addr = addr;
  i.stride_ = stride;
  return i;
}

Instruction Instruction::ext(int v, int va, int vb, int lane) {
  Instruction i;
  i.op = Opcode::ext;
  i.dst = v;
  i.a = va;
  i.b = vb;
  i.k = lane;
  return i;
}

Instruction Instruction::mzero(int m) {
  Instruction i;
  i.op = Opcode::mzero;
  i.dst = m;
  return i;
}

Instruction Instruction::fmopa(int m, int va, int vb) {
  Instruction i;
  i.op = Opcode::fmopa;
  i.dst = m;
  i.a = va;
  i.b = vb;
  return i;
}

Instruction Instruction::mova_row(int m, int row, int v) {
  Instruction i;
  i.op = Opcode::mova_row;
  i.dst = m;
  i.k = row;
  i.a = v;
  return i;
}

Instruction Instruction::mova_col(int v, int m, int col) {
  Instruction i;
  i.op = Opcode::mova_col;
  i.dst = v;
  i.a = m;
  i.k = col;
  return i;
}

Instruction Instruction::mstore_row(int m, int row, std::int64_t addr) {
  Instruction i;
  i.op = Opcode::mstore_row;
  i.a = m;
  i.k = row;
  i.addr = addr;
  return i;
}

namespace {

void check(bool ok, std::size_t index, const char* what) {
  if (!ok) throw TrapError(index, what);
}

}  // namespace

void validate_program(const Program& p, const MachineConfig& cfg) {
  cfg.validate();
  const int n = cfg.lanes;
  for (std::size_t i = 0; i < p.code.size(); ++i) {
    const Instruction& inst = p.code[i];
    auto vreg_ok = [&](std::int32_t v) { return v >= 0 && v < cfg.vregs; };
    auto mreg_ok = [&](std::int32_t m) { return m >= 0 && m < cfg.mregs; };
    auto lane_ok = [&](std::int32_t k) { return k >= 0 && k < n; };
    switch (inst.op) {
      case Opcode::vload:
        check(vreg_ok(inst.dst), i, "vector register out of range");
        check(inst.addr >= 0, i, "negative address");
        break;
      case Opcode::vload_strided:
        check(vreg_ok(inst.dst), i, "vector register out of range");
        check(inst.addr >= 0, i, "negative address");
        check(inst.stride() >= 1, i, "stride must be positive");
        break;
      case Opcode::ext:
        check(vreg_ok(inst.dst) && vreg_ok(inst.a) && vreg_ok(inst.b), i, "vector register out of range");
        check(lane_ok(inst.k), i, "extract lane out of range");
        break;
      case Opcode::mzero:
        check(mreg_ok(inst.dst), i, "matrix register out of range");
        break;
      case Opcode::fmopa:
        check(mreg_ok(inst.dst), i, "matrix register out of range");
        check(vreg_ok(inst.a) && vreg_ok(inst.b), i, "vector register out of range");
        break;
      case Opcode::mova_row:
        check(mreg_ok(inst.dst) && vreg_ok(inst.a), i, "register out of range");
        check(lane_ok(inst.k), i, "row out of range");
        break;
      case Opcode::mova_col:
        check(vreg_ok(inst.dst) && mreg_ok(inst.a), i, "register out of range");
        check(lane_ok(inst.k), i, "column out of range");
        break;
      case Opcode::mstore_row:
        check(mreg_ok(inst.a), i, "matrix register out of range");
        check(lane_ok(inst.k), i, "row out of range");
        check(inst.addr >= 0, i, "negative address");
        break;
    }
  }
}

void fmopa_apply(std::span<double> acc, std::span<const double> u, std::span<const double> v) {
  const std::size_t n = u.size();
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b) acc[a * n + b] = std::fma(u[a], v[b], acc[a * n + b]);
}

ExecutionStats execute(const Program& p, std::vector<double>& memory, const MachineConfig& cfg) {
  validate_program(p, cfg);
  const int n = cfg.lanes;
  const std::size_t nn = static_cast<std::size_t>(n);

  std::vector<double> vfile(static_cast<std::size_t>(cfg.vregs) * nn, 0.0);
  std::vector<double> mfile(static_cast<std::size_t>(cfg.mregs) * nn * nn, 0.0);
  auto vreg = [&](std::int32_t v) { return vfile.data() + static_cast<std::size_t>(v) * nn; };
  auto mreg = [&](std::int32_t m) { return mfile.data() + static_cast<std::size_t>(m) * nn * nn; };

  ExecutionStats st;
  const std::int64_t mem_size = static_cast<std::int64_t>(memory.size());

  for (std::size_t i = 0; i < p.code.size(); ++i) {
    const Instruction& inst = p.code[i];
    switch (inst.op) {
      case Opcode::vload: {
        check(inst.addr + n <= mem_size, i, "load past end of memory");
        double* d = vreg(inst.dst);
        for (int t = 0; t < n; ++t) d[t] = memory[static_cast<std::size_t>(inst.addr + t)];
        ++st.vload;
        st.bytes_loaded += nn * sizeof(double);
        break;
      }
      case Opcode::vload_strided: {
        const std::int64_t last = inst.addr + static_cast<std::int64_t>(n - 1) * inst.stride();
        check(last < mem_size, i, "strided load past end of memory");
        double* d = vreg(inst.dst);
        for (int t = 0; t < n; ++t) d[t] = memory[static_cast<std::size_t>(inst.addr + t * inst.stride())];
        ++st.vload_strided;
        st.bytes_loaded_strided += nn * sizeof(double);
        break;
      }
      case Opcode::ext: {
        const double* va = vreg(inst.a);
        const double* vb = vreg(inst.b);
        std::vector<double> tmp(nn);
        for (int t = 0; t < n; ++t) {
          int s = inst.k + t;
          tmp[static_cast<std::size_t>(t)] = s < n ? va[s] : vb[s - n];
        }
        double* d = vreg(inst.dst);
        for (int t = 0; t < n; ++t) d[t] = tmp[static_cast<std::size_t>(t)];
        ++st.ext;
        break;
      }
      case Opcode::mzero: {
        double* m = mreg(inst.dst);
        for (std::size_t t = 0; t < nn * nn; ++t) m[t] = 0.0;
        ++st.mzero;
        break;
      }
      case Opcode::fmopa: {
        double* m = mreg(inst.dst);
        const double* u = vreg(inst.a);
        const double* v = vreg(inst.b);
        for (std::size_t a = 0; a < nn; ++a)
          for (std::size_t b = 0; b < nn; ++b) m[a * nn + b] = std::fma(u[a], v[b], m[a * nn + b]);
        ++st.fmopa;
        break;
      }
      case Opcode::mova_row: {
        double* m = mreg(inst.dst);
        const double* v = vreg(inst.a);
        for (std::size_t b = 0; b < nn; ++b) m[static_cast<std::size_t>(inst.k) * nn + b] = v[b];
        ++st.mova_row;
        break;
      }
      case Opcode::mova_col: {
        double* v = vreg(inst.dst);
        const double* m = mreg(inst.a);
        for (std::size_t a = 0; a < nn; ++a) v[a] = m[a * nn + static_cast<std::size_t>(inst.k)];
        ++st.mova_col;
        break;
      }
      case Opcode::mstore_row: {
        check(inst.addr + n <= mem_size, i, "store past end of memory");
        const double* m = mreg(inst.a);
        for (int b = 0; b < n; ++b)
          memory[static_cast<std::size_t>(inst.addr + b)] = m[static_cast<std::size_t>(inst.k) * nn + static_cast<std::size_t>(b)];
        ++st.mstore_row;
        st.bytes_stored += nn * sizeof(double);
        break;
      }
    }
    ++st.instr_total;
  }
  return st;
}

std::string format_instruction(const Instruction& inst) {
  std::ostringstream os;
  os << opcode_name(inst.op) << ' ';
  switch (inst.op) {
    case Opcode::vload: os << 'v' << inst.dst << ", " << inst.addr; break;
    case Opcode::vload_strided: os << 'v' << inst.dst << ", " << inst.addr << ", " << inst.stride(); break;
    case Opcode::ext: os << 'v' << inst.dst << ", v" << inst.a << ", v" << inst.b << ", " << inst.k; break;
    case Opcode::mzero: os << 'm' << inst.dst; break;
    case Opcode::fmopa: os << 'm' << inst.dst << ", v" << inst.a << ", v" << inst.b; break;
    case Opcode::mova_row: os << 'm' << inst.dst << ", " << inst.k << ", v" << inst.a; break;
    case Opcode::mova_col: os << 'v' << inst.dst << ", m" << inst.a << ", " << inst.k; break;
    case Opcode::mstore_row: os << 'm' << inst.a << ", " << inst.k << ", " << inst.addr; break;
  }
  return os.str();
}

std::string format_trace(const Program& p) {
  std::string out;
  for (const Instruction& inst : p.code) {
    out += format_instruction(inst);
    out += '\n';
  }
  return out;
}

}  // namespace opsten
