#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sf {

// Coarse error categories; the CLI prints the category as a stable token.
enum class ErrorKind {
    InvalidInput,
    Numeric,
    Io,
    Protocol,
    Unavailable,
    Corrupt,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string &message) : std::runtime_error(message), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string &message) { throw Error(kind, message); }

inline void require(bool cond, const std::string &message) {
    if (!cond)
        throw Error(ErrorKind::InvalidInput, message);
}

void log_warning(std::string_view message);
void log_info(std::string_view message);

} // namespace sf
