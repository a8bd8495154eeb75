#pragma once

#include <stdexcept>
#include <string>

namespace avgcase {

// Invalid parameters for a sampler, kernel or pipeline.
struct ParameterError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Argument outside the domain of a numeric function.
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

// A monotone adversary tried to touch a protected pair.
struct AdversaryViolation : std::logic_error {
  using std::logic_error::logic_error;
};

// Malformed input to a statistical test.
struct TestError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Brute-force enumeration would exceed the configured budget.
struct FeasibilityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed file contents.
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline void require(bool ok, const std::string& what) {
  if (!ok) throw ParameterError(what);
}

}  // namespace avgcase
