#pragma once

#include <stdexcept>
#include <string>

namespace choiceforge {

/// Base of every error raised by the library. The CLI maps the concrete
/// subclasses onto its exit-code contract.
class ChoiceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Attribute vectors, parameter vectors or scenarios disagree in shape.
class SchemaError : public ChoiceError {
 public:
  using ChoiceError::ChoiceError;
};

/// Caller supplied an argument outside the operation's domain.
class InputError : public ChoiceError {
 public:
  using ChoiceError::ChoiceError;
};

/// An attribute carries no variation, so its coefficient cannot be estimated.
class IdentificationError : public ChoiceError {
 public:
  IdentificationError(std::string attribute, const std::string& what)
      : ChoiceError(what), attribute_(std::move(attribute)) {}

  const std::string& attribute() const noexcept { return attribute_; }

 private:
  std::string attribute_;
};

/// Likelihood keeps increasing as some coefficient diverges.
class SeparationError : public ChoiceError {
 public:
  using ChoiceError::ChoiceError;
};

/// Hessian or normal equations could not be inverted.
class SingularityError : public ChoiceError {
 public:
  using ChoiceError::ChoiceError;
};

/// Regressors in a causal link are linearly dependent.
class CollinearityError : public ChoiceError {
 public:
  using ChoiceError::ChoiceError;
};

/// Parameters imply upward-sloping demand (price coefficient >= 0).
class EconomicValidityError : public ChoiceError {
 public:
  using ChoiceError::ChoiceError;
};

}  // namespace choiceforge
