#pragma once

#include <stdexcept>
#include <string>

namespace occgrid {

// Error taxonomy mirrors the CLI exit codes: usage -> 1, format -> 2,
// invariant -> 3.
class UsageError : public std::runtime_error {
public:
  explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

class FormatError : public std::runtime_error {
public:
  explicit FormatError(const std::string& msg) : std::runtime_error(msg) {}
};

class InvariantError : public std::runtime_error {
public:
  explicit InvariantError(const std::string& msg) : std::runtime_error(msg) {}
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw InvariantError(msg);
}

}  // namespace occgrid
