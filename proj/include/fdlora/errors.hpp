// Copyright (c) 2026, The fdlora Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace fdlora {

/// Operand shapes are incompatible. The message names both shapes.
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Caller-supplied data is malformed (bad label, bad file line, ...).
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// An experiment or component configuration is invalid.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A precondition of an operation was violated by the caller.
class ContractError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// A computation produced NaN or Inf.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Two adapters cannot be fused (rank or shape mismatch).
class FusionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A derivative-free search found no usable candidate.
class OptimizationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace fdlora
