#pragma once

#include <sstream>
#include <stdexcept>
#include <string>

namespace stylerep {

namespace detail {
inline void str_append(std::ostringstream&) {}
template <typename T, typename... Rest>
void str_append(std::ostringstream& os, const T& v, const Rest&... rest) {
    os << v;
    str_append(os, rest...);
}
} // namespace detail

/// Builds a message string from heterogeneous parts.
template <typename... Parts>
std::string str(const Parts&... parts) {
    std::ostringstream os;
    detail::str_append(os, parts...);
    return os.str();
}

/// Base class for all library errors.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Dimension or extent disagreement between operands.
struct ShapeError : Error {
    explicit ShapeError(const std::string& msg) : Error(msg) {}
};

/// Malformed or inconsistent input data (files, labels, containers).
struct DataError : Error {
    explicit DataError(const std::string& msg) : Error(msg) {}
};

/// Non-finite values or failed numeric procedures.
struct NumericError : Error {
    explicit NumericError(const std::string& msg) : Error(msg) {}
};

} // namespace stylerep
