#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fundus {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed encoded image; offset is the byte position where parsing failed.
class DecodeError : public Error {
public:
    DecodeError(const std::string& what, std::size_t offset);
    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

class ParameterError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

// Tensor shape mismatch; layer names the offending layer or parameter.
class ShapeError : public Error {
public:
    ShapeError(const std::string& layer, const std::string& what);
    const std::string& layer() const noexcept { return layer_; }

private:
    std::string layer_;
};

// Model file could not be read.
class FormatError : public Error {
public:
    using Error::Error;
};

// A metric is undefined for the given samples (e.g. no positives).
class MetricError : public Error {
public:
    MetricError(const std::string& metric, const std::string& what);
    const std::string& metric() const noexcept { return metric_; }

private:
    std::string metric_;
};

class TrainingError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace fundus
