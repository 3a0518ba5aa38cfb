#pragma once

#include <stdexcept>
#include <string>

namespace bsl {

// Invalid argument values or shapes supplied by a caller.
class validation_error : public std::invalid_argument {
public:
    explicit validation_error(const std::string& msg) : std::invalid_argument(msg) {}
};

// Inconsistent composite structures (ragged grids, mismatched records).
class structural_error : public std::runtime_error {
public:
    explicit structural_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad run configuration, CLI flags, or config files. CLI maps this to exit 2.
class config_error : public std::runtime_error {
public:
    explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Operation cannot be performed on this object (e.g. stripped records).
class unsupported_error : public std::runtime_error {
public:
    explicit unsupported_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite loss during training; message carries step context.
class divergence_error : public std::runtime_error {
public:
    explicit divergence_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Metric is undefined for the given inputs (e.g. single-class AUC).
class metric_error : public std::runtime_error {
public:
    explicit metric_error(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace bsl
