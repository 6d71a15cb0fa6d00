#pragma once

#include <stdexcept>
#include <string>

namespace ram {

// Base for every error the library raises on purpose.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Shape or dimensionality disagreement between tensors.
struct DimensionError : Error {
    explicit DimensionError(const std::string& msg) : Error(msg) {}
};

// Invalid configuration value or unparseable config file.
struct ConfigError : Error {
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

// Invalid call argument (out-of-range label, empty dataset, non-scalar loss).
struct ArgumentError : Error {
    explicit ArgumentError(const std::string& msg) : Error(msg) {}
};

// Misuse of the autodiff graph (backward twice, backward on a detached tensor).
struct GraphError : Error {
    explicit GraphError(const std::string& msg) : Error(msg) {}
};

// Object used before it reached the required state (e.g. incomplete trace).
struct StateError : Error {
    explicit StateError(const std::string& msg) : Error(msg) {}
};

// Malformed file contents.
struct FormatError : Error {
    explicit FormatError(const std::string& msg) : Error(msg) {}
};

// Dataset index and files on disk disagree.
struct ConsistencyError : Error {
    explicit ConsistencyError(const std::string& msg) : Error(msg) {}
};

// Filesystem-level failure.
struct IoError : Error {
    explicit IoError(const std::string& msg) : Error(msg) {}
};

// Unreadable, corrupt or wrong-version checkpoint.
struct CheckpointError : Error {
    explicit CheckpointError(const std::string& msg) : Error(msg) {}
};

} // namespace ram
