#pragma once

#include <stdexcept>
#include <string>

namespace scen {

// Bad shapes or malformed op arguments. Always names the op and the shapes.
class ShapeError : public std::invalid_argument {
public:
    explicit ShapeError(const std::string& msg) : std::invalid_argument(msg) {}
};

// Invalid configuration, files, or dataset contents. CLI maps this to exit code 1.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite value where the math guarantees finiteness. CLI maps this to exit code 2.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace scen
