#pragma once

#include <stdexcept>
#include <string>

namespace hexheat {

/// Base class for all toolkit errors. The CLI maps each subclass to a
/// distinct process exit code.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Bad or inconsistent configuration (missing paths, invalid diameters...).
/// Exit code 2.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Malformed input data (raster headers, CSV rows...). Exit code 3.
class IngestError : public Error {
public:
    using Error::Error;
};

/// Numeric domain violations and estimation failures. Exit code 4.
class NumericError : public Error {
public:
    using Error::Error;
};

/// External service failures (geocoding). Exit code 5.
class ServiceError : public Error {
public:
    using Error::Error;
};

} // namespace hexheat
