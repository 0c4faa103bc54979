#pragma once

#include <stdexcept>
#include <string>

namespace relgnn {

enum class ErrorKind {
    invalid_argument = 1,
    io = 2,
    parse = 3,
    config = 4,
    runtime = 5,
};

// Every failure inside the library is reported as an Error; the C layer maps
// kind() onto its status codes.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
    throw Error(kind, what);
}

}  // namespace relgnn
