#pragma once

#include <stdexcept>
#include <string>

namespace dive {

// Malformed or inconsistent input data (bad JSONL, broken binary files,
// violated format invariants). Maps to CLI exit code 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite or otherwise numerically unusable values. Maps to CLI exit
// code 3.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dive
