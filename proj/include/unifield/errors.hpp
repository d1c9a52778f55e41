#pragma once

#include <stdexcept>
#include <string>

namespace unifield {

class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Non-finite values during training or sampling. `where` is the iteration
/// or step index at which they appeared.
class DivergedError : public std::runtime_error {
 public:
  DivergedError(const std::string& what, long where) : std::runtime_error(what), where_(where) {}
  long where() const { return where_; }

 private:
  long where_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace unifield
