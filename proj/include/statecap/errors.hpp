#pragma once

#include <stdexcept>
#include <string>

namespace statecap {

struct InvalidInput : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct InvalidEpsilon : InvalidInput {
  using InvalidInput::InvalidInput;
};

struct InvalidModel : InvalidInput {
  using InvalidInput::InvalidInput;
};

struct DegenerateDispersion : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NonConvergence : std::runtime_error {
  NonConvergence(const std::string& what, double lower, double upper)
      : std::runtime_error(what), lower_bits(lower), upper_bits(upper) {}
  double lower_bits;
  double upper_bits;
};

struct NotErgodic : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Unsupported : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct OutOfValidity : std::runtime_error {
  OutOfValidity(const std::string& what, double n_min)
      : std::runtime_error(what), n_min(n_min) {}
  double n_min;
};

struct BetaMismatch : InvalidInput {
  using InvalidInput::InvalidInput;
};

struct InconsistentType : InvalidInput {
  using InvalidInput::InvalidInput;
};

struct BudgetExceeded : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EnumerationTooLarge : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SchemaError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TaskError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace statecap
