#pragma once

#include <stdexcept>
#include <string>

namespace evolve {

struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct TimeDomainError : std::domain_error {
  using std::domain_error::domain_error;
};

// A Gram matrix failed a positivity or conditioning requirement.
struct SingularGramError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Hard failure of the positive-definiteness invariant at a sample time.
struct SpdViolationError : std::runtime_error {
  double t;
  SpdViolationError(const std::string& msg, double t_) : std::runtime_error(msg), t(t_) {}
};

// A finite-difference stencil does not fit inside [0, T].
struct StencilError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PreconditionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Non-finite values appeared during time stepping.
struct BlowUpError : std::runtime_error {
  long step;
  BlowUpError(const std::string& msg, long step_) : std::runtime_error(msg), step(step_) {}
};

struct MemoryGuardError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
  int line;
  int col;
  ParseError(const std::string& msg, int line_, int col_)
      : std::runtime_error(msg), line(line_), col(col_) {}
};

}  // namespace evolve
