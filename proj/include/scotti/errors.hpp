#pragma once

#include <stdexcept>
#include <string>

namespace scotti {

// Error taxonomy. The CLI maps these onto exit codes: ConfigError -> 1,
// Dimension/Format/Contract/State -> 2, NumericError -> 3.

struct DimensionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ContractError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct StateError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace scotti
