#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace hoofwatch {

// Domain error with a machine-readable reason code. `line` is nonzero for
// errors tied to a specific input line.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message, int line = 0)
        : std::runtime_error(message), code_(std::move(code)), line_(line) {}

    const std::string& code() const { return code_; }
    int line() const { return line_; }

private:
    std::string code_;
    int line_;
};

}  // namespace hoofwatch
