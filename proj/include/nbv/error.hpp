#pragma once

#include <stdexcept>
#include <string>

namespace nbv {

/// Bad user input: malformed files, invalid parameters, missing data.
/// Command-line tools map this to exit code 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parse failure in a mesh, image, camera or config file. The message carries
/// the line number or byte offset.
class FormatError : public InputError {
 public:
  using InputError::InputError;
};

/// A documented precondition of an operation was violated by the caller.
class PreconditionError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace nbv
