#pragma once

#include <stdexcept>
#include <string>

namespace sfpc {

/// Base of every exception thrown by the library. `kind()` is a stable,
/// machine-readable tag used by the CLI error report.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
  virtual const char* kind() const noexcept { return "error"; }
};

#define SFPC_DEFINE_ERROR(Name, tag)                              \
  class Name : public Error {                                     \
   public:                                                        \
    using Error::Error;                                           \
    const char* kind() const noexcept override { return tag; }    \
  };

SFPC_DEFINE_ERROR(ArgumentError, "argument")
SFPC_DEFINE_ERROR(GeometryError, "geometry")
SFPC_DEFINE_ERROR(LocationError, "location")
SFPC_DEFINE_ERROR(ConstructionError, "construction")
SFPC_DEFINE_ERROR(NumericError, "numeric")
SFPC_DEFINE_ERROR(ConditioningError, "conditioning")
SFPC_DEFINE_ERROR(StationarityError, "stationarity")
SFPC_DEFINE_ERROR(FitError, "fit")
SFPC_DEFINE_ERROR(ParseError, "parse")
SFPC_DEFINE_ERROR(ConfigError, "config")
SFPC_DEFINE_ERROR(InternalError, "internal")

#undef SFPC_DEFINE_ERROR

}  // namespace sfpc
