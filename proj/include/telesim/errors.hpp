#pragma once

#include <stdexcept>
#include <string>

namespace telesim {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// frames
struct DegenerateFiducials : Error { using Error::Error; };

// filter
struct NonFiniteMeasurement : Error { using Error::Error; };

// geometry
struct EmptyScene : Error { using Error::Error; };

// transport
struct MalformedDatagram : Error { using Error::Error; };
struct NonCausalTimestamps : Error { using Error::Error; };
struct EmptyTrace : Error { using Error::Error; };

// metrics
struct EmptyLog : Error { using Error::Error; };
struct MissingCondition : Error { using Error::Error; };

// stats
struct DegenerateInput : Error { using Error::Error; };
struct AllZeroDifferences : Error { using Error::Error; };

// harness
struct CorruptLog : Error { using Error::Error; };
struct UnpairedInput : Error { using Error::Error; };
struct RuntimeViolation : Error { using Error::Error; };

// Carries the config field path that failed validation.
struct ConfigError : Error {
  ConfigError(std::string field_path, const std::string& what)
      : Error(field_path + ": " + what), field(std::move(field_path)) {}
  std::string field;
};

}  // namespace telesim
