#pragma once

#include <stdexcept>
#include <string>

namespace promptrank {

// Bad user input: malformed corpus/config/template files, unknown ids,
// unreadable paths. The CLI maps this to exit code 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Model weights could not be loaded or inference failed. Exit code 3.
class BackendError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace promptrank
