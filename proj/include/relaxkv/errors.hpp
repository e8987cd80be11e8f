#pragma once

#include <stdexcept>
#include <string>

namespace relaxkv {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid or incomplete configuration. The CLI maps this to exit code 2.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A runtime contract was violated (bad precondition, inconsistent inputs).
/// The CLI maps this and all subclasses to exit code 3.
class ContractError : public Error {
public:
    using Error::Error;
};

class DegeneratePrototypeError : public ContractError {
public:
    using ContractError::ContractError;
};

class EmptyGroupError : public ContractError {
public:
    using ContractError::ContractError;
};

class InvalidStepError : public ContractError {
public:
    using ContractError::ContractError;
};

class WindowOverflowError : public ContractError {
public:
    using ContractError::ContractError;
};

class CacheMissError : public ContractError {
public:
    using ContractError::ContractError;
};

class DegenerateFeatureError : public ContractError {
public:
    using ContractError::ContractError;
};

}  // namespace relaxkv
