#pragma once

#include <stdexcept>
#include <string>

namespace ofo {

// Bad user input: config files, dimensions that disagree, invalid parameters.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A numerical routine could not produce a trustworthy result.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Innovation matrix of the sensitivity update could not be factored.
class SingularUpdateError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// Plant evaluated outside its admissible input box.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ofo
