#pragma once

#include <stdexcept>
#include <string>

namespace shaken {

// A requested computation exceeds a hard resource cap (enumeration budget,
// coalescence step cap). Distinct from invalid input.
class ResourceCapError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EnumerationBudgetExceeded : public ResourceCapError {
 public:
  using ResourceCapError::ResourceCapError;
};

class CoalescenceTimeout : public ResourceCapError {
 public:
  using ResourceCapError::ResourceCapError;
};

class InsufficientSamples : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace shaken
