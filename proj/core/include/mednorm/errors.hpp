#pragma once

#include <stdexcept>
#include <string>

namespace mednorm {

// All recoverable failures surface as subclasses of Error so the CLI can
// print a single machine-parsable line and exit nonzero.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& message)
        : std::runtime_error(kind + ": " + message), kind_(std::move(kind)) {}

    const std::string& kind() const { return kind_; }

private:
    std::string kind_;
};

class ParseError : public Error {
public:
    explicit ParseError(const std::string& message) : Error("parse_error", message) {}
};

class SchemaError : public Error {
public:
    explicit SchemaError(const std::string& message) : Error("schema_error", message) {}
};

class SpanError : public Error {
public:
    explicit SpanError(const std::string& message) : Error("span_error", message) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& message) : Error("io_error", message) {}
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& message) : Error("config_error", message) {}
};

// kb_hash disagreement between pipeline stages.
class ConsistencyError : public Error {
public:
    explicit ConsistencyError(const std::string& message) : Error("consistency_error", message) {}
};

class TransportError : public Error {
public:
    explicit TransportError(const std::string& message) : Error("transport_error", message) {}
};

class NumericError : public Error {
public:
    explicit NumericError(const std::string& message) : Error("numeric_error", message) {}
};

}  // namespace mednorm
