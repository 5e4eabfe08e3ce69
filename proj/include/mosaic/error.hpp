#pragma once

#include <stdexcept>
#include <string>

namespace mosaic {

enum class ErrorKind {
    invalid_argument,  // precondition or configuration problem
    format,            // malformed or inconsistent file
    numerical,         // non-finite loss, singular system
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(const std::string& what) {
    throw Error(ErrorKind::invalid_argument, what);
}

[[noreturn]] inline void fail_format(const std::string& what) {
    throw Error(ErrorKind::format, what);
}

[[noreturn]] inline void fail_numerical(const std::string& what) {
    throw Error(ErrorKind::numerical, what);
}

inline void require(bool condition, const std::string& what) {
    if (!condition) fail(what);
}

}  // namespace mosaic
