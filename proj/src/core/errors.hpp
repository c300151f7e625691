#pragma once

#include <stdexcept>
#include <string>

namespace scafm {

enum class ErrorCode {
    validation = 1,
    format = 2,
    corruption = 3,
    state = 4,
    dimension = 5,
    config = 6,
    resource = 7,
    numeric = 8,
    io = 9,
    generation = 10,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& msg)
        : std::runtime_error(msg), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& msg) {
    throw Error(code, msg);
}

inline void require(bool ok, ErrorCode code, const std::string& msg) {
    if (!ok) raise(code, msg);
}

} // namespace scafm
