#pragma once

#include <stdexcept>
#include <string>

namespace advtrans {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Violation of a documented call contract (shape mismatch, bad argument).
class ContractError : public Error {
public:
    using Error::Error;
};

/// Dataset ingestion / file-system failure.
class IoError : public Error {
public:
    using Error::Error;
};

/// Invalid or unknown configuration key/value.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace advtrans
