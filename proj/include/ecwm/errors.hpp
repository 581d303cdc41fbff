#pragma once

#include <stdexcept>
#include <string>

namespace ecwm {

/// Precondition violated by the caller (mismatched moduli, off-curve points, ...).
class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Inverse requested for zero.
class NonInvertible : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Non-finite or otherwise unusable input sample.
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Watermark parameters outside the admissible set.
class ParameterError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Invalid configuration. `path()` names the offending field when known.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what, std::string path = {})
        : std::runtime_error(path.empty() ? what : path + ": " + what), path_(std::move(path)) {}

    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

/// Enumeration requested beyond the configured size bound.
class CapacityError : public std::length_error {
public:
    using std::length_error::length_error;
};

/// A simulated block left the representable range.
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(std::string block, long step)
        : std::runtime_error("state of block '" + block + "' diverged at step " + std::to_string(step)),
          block_(std::move(block)), step_(step) {}

    const std::string& block() const noexcept { return block_; }
    long step() const noexcept { return step_; }

private:
    std::string block_;
    long step_;
};

}  // namespace ecwm
