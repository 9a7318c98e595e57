// SPDX-License-Identifier: Apache-2.0

#ifndef FGRN_ERROR_HPP
#define FGRN_ERROR_HPP

#include <stdexcept>
#include <string>

namespace fgrn {

enum class ErrorCode {
    ShapeMismatch,
    NotDivisible,
    NotScalar,
    NoGraph,
    ImageTooSmall,
    TooSmall,
    DecodeError,
    BadConfig,
    NaNLoss,
    CorruptFile,
    VersionMismatch,
    Usage,
    Internal,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& msg)
        : std::runtime_error(msg), code_(code) {}

    ErrorCode code() const { return code_; }

    /// One-line "<CodeName>: <message>" form used by the CLI.
    std::string line() const {
        return std::string(error_code_name(code_)) + ": " + what();
    }

private:
    ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& msg) {
    throw Error(code, msg);
}

} // namespace fgrn

#endif // FGRN_ERROR_HPP
