#pragma once

#include <stdexcept>
#include <string>

namespace qclock {

// Base of everything thrown by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Input violates a structural or physical precondition. CLI exit code 2.
class ValidationError : public Error {
public:
    using Error::Error;
};

// A numerical validity guard refused to produce a value it cannot trust.
// CLI exit code 3.
class NumericalGuardError : public Error {
public:
    using Error::Error;
};

// Filesystem and parsing-adjacent failures. CLI exit code 4.
class IoError : public Error {
public:
    using Error::Error;
};

// --- geometry ---

class NonContiguousWorldLine : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class SuperluminalSegment : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class OutsideRindlerWedge : public ValidationError {
public:
    using ValidationError::ValidationError;
};

// Thrown by closed forms whose derivation assumes a weak field; the
// integrating code paths report the same condition as a flag instead.
class PostNewtonianGuardTripped : public NumericalGuardError {
public:
    using NumericalGuardError::NumericalGuardError;
};

// --- internal spectra ---

class InvalidPopulation : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class TruncationTooSevere : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class LevelCapExceeded : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class NonPositiveArgument : public ValidationError {
public:
    using ValidationError::ValidationError;
};

// --- coherence ---

class UnsupportedLaw : public ValidationError {
public:
    using ValidationError::ValidationError;
};

// --- dynamics ---

class GuardTripped : public NumericalGuardError {
public:
    using NumericalGuardError::NumericalGuardError;
};

class NoRealRoot : public NumericalGuardError {
public:
    using NumericalGuardError::NumericalGuardError;
};

class WrongSignature : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class DimensionMismatch : public ValidationError {
public:
    using ValidationError::ValidationError;
};

// --- scenario / CLI ---

class ParseError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class MissingFile : public IoError {
public:
    using IoError::IoError;
};

class InapplicableParameter : public ValidationError {
public:
    using ValidationError::ValidationError;
};

} // namespace qclock
