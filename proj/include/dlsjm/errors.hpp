// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <stdexcept>
#include <string>

namespace dlsjm {

// Bad or inconsistent input (data files, configs, preconditions). CLI exit code 2.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Item column with no correct answers; f_i(Z) is undefined there.
class DegenerateItemError : public ValidationError {
 public:
  explicit DegenerateItemError(const std::string& msg) : ValidationError(msg) {}
};

// Non-finite intermediate that cannot be recovered from. CLI exit code 3.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

// A guard on an iterative procedure tripped (restarts exhausted, etc). CLI exit code 4.
class ConvergenceGuardError : public std::runtime_error {
 public:
  explicit ConvergenceGuardError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace dlsjm
