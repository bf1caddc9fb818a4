#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lastrank {

// Thrown when a caller breaks an operation's precondition (shape mismatch,
// N > M, empty mask, ...).
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Thrown by the JSONL and checkpoint readers. line() is 1-based, 0 when the
// error is not tied to a specific line.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ContractViolation(message);
}

}  // namespace lastrank
