#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qrm {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A parameter is outside its physical or numerical domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A documented precondition on an input object was violated.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Finite-difference stencil too coarse: neighbouring states are not close.
class StepTooLargeError : public Error {
 public:
  using Error::Error;
};

/// Parameter derivatives are unavailable at a sweep index.
class DerivativeInvalidError : public Error {
 public:
  DerivativeInvalidError(const std::string& what, std::size_t index)
      : Error(what + " (index " + std::to_string(index) + ")"), index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

/// A closed form landed on the wrong algebraic branch.
class NumericalBranchError : public Error {
 public:
  using Error::Error;
};

class RankDeficientError : public Error {
 public:
  using Error::Error;
};

class NoSignChangeError : public Error {
 public:
  using Error::Error;
};

/// Record written by an older/newer schema.
class MigrationNeededError : public Error {
 public:
  MigrationNeededError(int found, int expected)
      : Error("sweep record schema v" + std::to_string(found) + " needs migration to v" +
              std::to_string(expected)),
        found_(found) {}
  int found_version() const noexcept { return found_; }

 private:
  int found_;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " at byte " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

}  // namespace qrm
