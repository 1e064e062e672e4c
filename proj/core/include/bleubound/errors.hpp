#pragma once

#include <stdexcept>
#include <string>

namespace bleubound {

// Base of every error raised by the library. Each subclass corresponds to one
// failure mode callers may want to branch on (the CLI maps them to exit codes).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnknownToken : public Error {
 public:
  explicit UnknownToken(std::string token)
      : Error("unknown token: '" + token + "'"), token_(std::move(token)) {}
  const std::string& token() const noexcept { return token_; }

 private:
  std::string token_;
};

class IdOutOfRange : public Error {
 public:
  using Error::Error;
};

class NonFiniteInput : public Error {
 public:
  using Error::Error;
};

class LengthTooShort : public Error {
 public:
  using Error::Error;
};

class ZeroLength : public Error {
 public:
  using Error::Error;
};

class EmptyText : public Error {
 public:
  using Error::Error;
};

class EmptyCorpus : public Error {
 public:
  using Error::Error;
};

class PositionOutOfRange : public Error {
 public:
  using Error::Error;
};

class ShapeMismatch : public Error {
 public:
  using Error::Error;
};

// Exhaustive enumeration would exceed the configured outcome cap.
class InstanceTooLarge : public Error {
 public:
  using Error::Error;
};

class InvalidConfig : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace bleubound
