#pragma once

#include <stdexcept>
#include <string>

namespace bgsep {

enum class ErrorCode {
    invalid_argument,
    grid_mismatch,
    dimension_mismatch,
    degenerate_input,
    singular_system,
    exhausted,
    io,
    config,
};

const char* to_string(ErrorCode code);

// Every failure raised by the library carries one of the codes above so that
// callers (and tests) can branch on the category without parsing messages.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace bgsep
