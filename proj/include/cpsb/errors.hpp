#pragma once

#include <stdexcept>
#include <string>

namespace cpsb {

// Base for everything thrown by the library. exit_code() maps an error family
// to the CLI process exit status: 1 config/domain, 3 numerical.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
    virtual int exit_code() const { return 1; }
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class QueryBeforeFirstArrival : public Error {
public:
    using Error::Error;
};

class EmptyWindow : public Error {
public:
    using Error::Error;
};

class OutOfWindow : public Error {
public:
    using Error::Error;
};

class OutOfDomain : public Error {
public:
    using Error::Error;
};

class NegativeComputingTime : public Error {
public:
    using Error::Error;
};

class DeadlineExceeded : public Error {
public:
    using Error::Error;
};

class NoExpiryInRange : public Error {
public:
    using Error::Error;
};

class InvalidParams : public Error {
public:
    using Error::Error;
};

class NonpositiveCurrent : public Error {
public:
    using Error::Error;
};

class InvalidRegime : public Error {
public:
    using Error::Error;
};

class EmptyRuns : public Error {
public:
    using Error::Error;
};

class NumericalError : public Error {
public:
    using Error::Error;
    int exit_code() const override { return 3; }
};

class SingularCapacitance : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class StepTooLarge : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class WeightCollapse : public NumericalError {
public:
    using NumericalError::NumericalError;
};

}  // namespace cpsb
