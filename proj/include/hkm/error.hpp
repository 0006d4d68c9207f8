#pragma once

#include <stdexcept>
#include <string>

namespace hkm {

// Malformed arguments: dimension mismatch, empty center set, k out of range.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Input geometry the algorithms cannot handle, e.g. coincident points.
class DegenerateInput : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Exhaustive oracles refuse instances beyond their size guard.
class SizeError : public std::length_error {
 public:
  using std::length_error::length_error;
};

// Unreadable or malformed data files.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace hkm
