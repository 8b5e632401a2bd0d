// Copyright (C) 2026 The lova Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace lova {

/// Base of every error raised by the library. `exit_code()` is the process
/// status the CLI maps the error to.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual int exit_code() const noexcept { return 1; }
};

class InvalidArgument : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 2; }
};

class UsageError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 2; }
};

class PreconditionError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 2; }
};

class SequenceTooLong : public Error {
public:
    SequenceTooLong(const std::string& what, std::size_t length, std::size_t capacity)
        : Error(what + ": length " + std::to_string(length) + " exceeds capacity " +
                std::to_string(capacity)),
          length_(length), capacity_(capacity) {}

    std::size_t length() const noexcept { return length_; }
    std::size_t capacity() const noexcept { return capacity_; }
    int exit_code() const noexcept override { return 2; }

private:
    std::size_t length_;
    std::size_t capacity_;
};

class NumericFailure : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 3; }
};

class TrainingDiverged : public NumericFailure {
public:
    using NumericFailure::NumericFailure;
};

class RegistryInconsistency : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 4; }
};

}  // namespace lova
