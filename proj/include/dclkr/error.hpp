#pragma once

#include <stdexcept>
#include <string>

namespace dclkr {

/// Invalid parameters, shapes or domains supplied by the caller.
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

/// Inputs that make a quantity undefined (zero self-HSIC, nonpositive scale, ...).
class DegenerateInputError : public std::domain_error {
 public:
  explicit DegenerateInputError(const std::string& what) : std::domain_error(what) {}
};

/// The non-iid partitioner could not cover every cell within its retry budget.
class CoverageError : public std::runtime_error {
 public:
  CoverageError(const std::string& what, int attempts)
      : std::runtime_error(what), attempts_(attempts) {}
  int attempts() const noexcept { return attempts_; }

 private:
  int attempts_;
};

/// A dense reference computation was asked for an instance larger than it supports.
class InstanceTooLargeError : public std::length_error {
 public:
  explicit InstanceTooLargeError(const std::string& what) : std::length_error(what) {}
};

/// A linear solve failed to produce a finite answer.
class SolveError : public std::runtime_error {
 public:
  explicit SolveError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace dclkr
