#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace opsten {

// Process exit codes used by the CLI. Library errors carry one of these so the
// tool can map failure classes to distinct codes.
enum class ExitCode : int {
  ok = 0,
  internal = 1,
  config = 2,
  size = 3,
  budget = 4,
  verify_failed = 5,
  io = 6,
};

class Error : public std::runtime_error {
public:
  Error(ExitCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ExitCode code() const { return code_; }

private:
  ExitCode code_;
};

// Bad stencil/machine/cover parameters.
struct ConfigError : Error {
  explicit ConfigError(const std::string& w) : Error(ExitCode::config, w) {}
};

// Grid extents that the tiling cannot handle.
struct SizeError : Error {
  explicit SizeError(const std::string& w) : Error(ExitCode::size, w) {}
};

// Register demand exceeds the machine description.
struct BudgetError : Error {
  explicit BudgetError(const std::string& w) : Error(ExitCode::budget, w) {}
};

// A line set that does not cover every nonzero weight.
struct CoverError : Error {
  explicit CoverError(const std::string& w) : Error(ExitCode::config, w) {}
};

// File and serialization problems.
struct IoError : Error {
  explicit IoError(const std::string& w) : Error(ExitCode::io, w) {}
};

// Runtime fault in the simulator; remembers the offending instruction.
class TrapError : public Error {
public:
  TrapError(std::size_t index, const std::string& what)
      : Error(ExitCode::internal, "trap at instruction " + std::to_string(index) + ": " + what),
        index_(index) {}
  std::size_t instruction_index() const { return index_; }

private:
  std::size_t index_;
};

}  // namespace opsten
