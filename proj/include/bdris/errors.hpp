#pragma once

#include <stdexcept>
#include <string>

namespace bdris {

/// Ill-formed arguments: wrong shapes, bad index sets, invalid option combinations.
struct StructuralError : std::invalid_argument {
    explicit StructuralError(const std::string& what) : std::invalid_argument(what) {}
};

/// Data that parsed fine but violates a physical or schema invariant.
struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed input file (bad JSON, missing fields, truncation).
struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

/// Filesystem failure (unreadable/unwritable path).
struct IoError : std::runtime_error {
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

/// (I - S_SS S_L) is numerically singular: a lossless resonance of the loaded cavity.
struct DegenerateCavityError : std::runtime_error {
    explicit DegenerateCavityError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace bdris
