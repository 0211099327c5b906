#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lmsel {

/// Invalid user-supplied configuration (world spec, experiment spec, policy).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the domain of an operation (unknown condition, negative radius).
class DomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Insertion that collides with existing state, e.g. a duplicate traversal id.
class ConflictError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Pose estimation without enough well-spread correspondences.
class DegenerateGeometryError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A metric whose denominator is empty.
class UndefinedMetricError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Malformed wire data. Carries the byte offset at which decoding failed.
class ProtocolError : public std::runtime_error {
public:
    ProtocolError(const std::string& what, std::size_t offset)
        : std::runtime_error(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}

    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

/// Transport-level failure: connection refused or closed, timeout.
class TransportError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace lmsel
