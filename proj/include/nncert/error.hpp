#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace nncert {

// Base for every error raised by the library. Infeasibility of a certificate
// is never an error; see CertifyOutcome.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidInterval : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

class CapacityError : public Error {
 public:
  CapacityError(const std::string& what, std::size_t required_log2)
      : Error(what), required_log2_(required_log2) {}
  /// log2 of the number of vertex combinations that would have been needed.
  std::size_t required_log2() const noexcept { return required_log2_; }

 private:
  std::size_t required_log2_;
};

class SchemaError : public Error {
 public:
  using Error::Error;
};

/// A check that a theorem says cannot fail did fail. Points at a bug.
class InternalError : public Error {
 public:
  using Error::Error;
};

}  // namespace nncert
