// Copyright 2026 The TuneQn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace tuneqn {

/// Root of every error the toolkit raises.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class FormatError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// Dangling value reference, duplicate id or similar structural defect.
class GraphError : public Error {
public:
    using Error::Error;
};

class UnsupportedOpError : public Error {
public:
    explicit UnsupportedOpError(std::vector<std::string> ops);
    const std::vector<std::string>& ops() const noexcept { return ops_; }

private:
    std::vector<std::string> ops_;
};

class UnsupportedDtypeError : public Error {
public:
    using Error::Error;
};

class DatasetError : public Error {
public:
    using Error::Error;
};

class ExecutionError : public Error {
public:
    using Error::Error;
};

class ArgumentError : public Error {
public:
    using Error::Error;
};

class RecipeError : public Error {
public:
    using Error::Error;
};

class AnalysisError : public Error {
public:
    using Error::Error;
};

class CheckpointError : public Error {
public:
    using Error::Error;
};

class ResumeError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace tuneqn
