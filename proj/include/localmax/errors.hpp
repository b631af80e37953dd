#pragma once

#include <stdexcept>
#include <string>

namespace localmax {

/// Invalid shapes, options or arguments detected before any compute.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Non-finite inputs, losses or gradients.
class NumericError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Broken internal contract, e.g. a trace replayed against the wrong network.
class InternalError : public std::logic_error {
public:
  using std::logic_error::logic_error;
};

/// Malformed input files (CSV cells, JSON configs).
class ParseError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class CheckpointError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

} // namespace localmax
