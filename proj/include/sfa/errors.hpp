#pragma once

#include <stdexcept>
#include <string>

namespace sfa {

// config / usage problems -> CLI exit code 2
struct ConfigError : std::runtime_error {
    int line; // 1-based line in the config file, 0 when not file-bound
    explicit ConfigError(const std::string& msg, int line_no = 0)
        : std::runtime_error(msg), line(line_no) {}
};

// checkpoint / config incompatibilities -> CLI exit code 3
struct MismatchError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// NaN/Inf escapes during computation -> CLI exit code 4
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace sfa
