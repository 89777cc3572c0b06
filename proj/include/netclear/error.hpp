#pragma once

#include <stdexcept>
#include <string>

namespace netclear {

/// Malformed input: dimension mismatches, violated preconditions, bad files.
class InvalidInput : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical routine could not produce an answer (non-contraction,
/// iteration cap, solver breakdown).
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

} // namespace netclear
