#pragma once

#include <stdexcept>
#include <string>

namespace oorl {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Incompatible tensor shapes or dimension mismatches.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// NaN/Inf produced by a forward op, or an out-of-domain input (e.g. log of 0).
class NumericError : public Error {
 public:
  using Error::Error;
};

// Misuse of the computation graph: non-scalar loss, consumed graph.
class GraphError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class EnvError : public Error {
 public:
  using Error::Error;
};

// A keyed record (actor output, Bellman context) lacks a required entry.
class KeyError : public Error {
 public:
  using Error::Error;
};

// Unreadable, corrupt or version-incompatible checkpoint or log.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace oorl
