#pragma once

#include <stdexcept>
#include <string>

namespace stgm {

// Error taxonomy mapped to CLI exit codes: config/schema problems -> 2,
// numerical failures -> 3, memory/size budgets -> 4.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : Error {
  using Error::Error;
};

struct ParseError : Error {
  using Error::Error;
};

struct SchemaError : Error {
  using Error::Error;
};

struct DomainError : Error {
  using Error::Error;
};

struct NumericalError : Error {
  using Error::Error;
};

struct ResourceError : Error {
  using Error::Error;
};

// Requesting an update/operation outside its supported (model, parameter) set.
struct ContractError : Error {
  using Error::Error;
};

}  // namespace stgm
