#pragma once

#include <stdexcept>
#include <string>

namespace slr {

// Base class for all library errors. Subclasses map 1:1 onto the C API
// status codes (see capi.h).
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed or inconsistent input data (bad polyline, bad box, bad dims).
class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& msg) : Error(msg) {}
};

// A pixel where every class is forbidden by the annotation constraints.
class AnnotationContradiction : public Error {
public:
    AnnotationContradiction(const std::string& msg, int x, int y)
        : Error(msg), px(x), py(y) {}
    int px = -1;
    int py = -1;
};

// No usable class prototype could be extracted for an image.
class PrototypeFailure : public Error {
public:
    explicit PrototypeFailure(const std::string& msg) : Error(msg) {}
};

// Bad or inconsistent run configuration.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

// File system / serialization failures.
class IoError : public Error {
public:
    explicit IoError(const std::string& msg) : Error(msg) {}
};

// Tensor shape mismatch; message names the offending layer or field.
class ShapeError : public Error {
public:
    explicit ShapeError(const std::string& msg) : Error(msg) {}
};

}  // namespace slr
