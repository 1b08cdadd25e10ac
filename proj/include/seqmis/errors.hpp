#pragma once

#include <stdexcept>
#include <string>

namespace seqmis {

/// Bad user input: malformed files, invalid parameters, violated preconditions.
class InputError : public std::invalid_argument {
 public:
  explicit InputError(const std::string& what) : std::invalid_argument(what) {}
};

/// A solver could not produce a trustworthy number.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace seqmis
