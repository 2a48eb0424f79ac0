#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace sgfb {

// Base of every error raised by the library. The CLI maps ConfigError to
// exit code 2 and everything else to exit code 1.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class DimensionError : public Error {
public:
    using Error::Error;
};

class AsymmetryError : public Error {
public:
    using Error::Error;
};

class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, int cap) : Error(what), cap_(cap) {}
    int cap() const noexcept { return cap_; }

private:
    int cap_;
};

class RankDeficiencyError : public Error {
public:
    RankDeficiencyError(const std::string& what, double eigenvalue)
        : Error(what), eigenvalue_(eigenvalue) {}
    double eigenvalue() const noexcept { return eigenvalue_; }

private:
    double eigenvalue_;
};

// Raised by solve_spd when the system is singular or indefinite.
class DegenerateSystemError : public Error {
public:
    using Error::Error;
};

class ParameterError : public Error {
public:
    using Error::Error;
};

class FilterDesignError : public Error {
public:
    using Error::Error;
};

class LengthError : public Error {
public:
    using Error::Error;
};

class EmptyClassError : public Error {
public:
    using Error::Error;
};

class NumericError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    ConfigError(const std::string& what, std::string key = {}, int line = 0)
        : Error(what), key_(std::move(key)), line_(line) {}
    const std::string& key() const noexcept { return key_; }
    int line() const noexcept { return line_; }

private:
    std::string key_;
    int line_;
};

class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t offset)
        : Error(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}
    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

class IoError : public Error {
public:
    using Error::Error;
};

// Cross-validation could not be set up: too few trials per class for the
// requested folds, a fraction that leaves a class empty, or no predictions.
class EvaluationError : public Error {
public:
    using Error::Error;
};

}  // namespace sgfb
