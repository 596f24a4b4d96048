#pragma once

#include <stdexcept>
#include <string>

namespace coherency {

// Malformed or inconsistent input: bad files, dimension mismatches,
// violated preconditions a caller could have checked. CLI exit code 1.
class InputError : public std::runtime_error {
public:
    explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

// Failure of a numeric procedure on well-formed input: divergence,
// singular systems, no positive coupling. CLI exit code 2.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace coherency
