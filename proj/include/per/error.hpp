#pragma once

#include <stdexcept>
#include <string>

namespace per {

// Raised for bad input: malformed files, violated preconditions, unknown
// names. The CLI maps it to exit code 2; anything else is an internal error.
class InputError : public std::runtime_error {
public:
    explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

// Exact enumeration would exceed the configured work/size cap.
class CapExceeded : public InputError {
public:
    explicit CapExceeded(const std::string& what) : InputError(what) {}
};

} // namespace per
