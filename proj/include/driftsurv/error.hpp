#pragma once
// Error type carrying a stable string code. The CLI surfaces these codes in
// machine-readable JSON so scripts can branch on them.

#include <stdexcept>
#include <string>

namespace driftsurv {

namespace errc {
inline constexpr const char* bad_args = "E_BAD_ARGS";
inline constexpr const char* data_not_found = "E_DATA_NOT_FOUND";
inline constexpr const char* parse = "E_PARSE";
inline constexpr const char* invalid_input = "E_INVALID_INPUT";
inline constexpr const char* schema = "E_SCHEMA";
inline constexpr const char* no_events = "E_NO_EVENTS";
inline constexpr const char* singular = "E_SINGULAR";
inline constexpr const char* numeric = "E_NUMERIC";
}  // namespace errc

class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

[[noreturn]] inline void fail(const char* code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace driftsurv
