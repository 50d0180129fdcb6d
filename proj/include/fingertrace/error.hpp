#pragma once

#include <stdexcept>
#include <string>

namespace fingertrace {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid parameters supplied before any processing starts.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A function argument outside its documented domain.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// A requested entity (device, file, window) does not exist.
class NotFoundError : public Error {
 public:
  using Error::Error;
};

}  // namespace fingertrace
