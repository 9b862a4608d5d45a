#pragma once

#include <stdexcept>
#include <string>

namespace mmccd {

// Bad user input: malformed config, missing paths, invalid flag combinations.
// The CLI maps this to exit code 2.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite values produced by a model or a loss; training has diverged.
struct DivergenceError : std::runtime_error {
    explicit DivergenceError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace mmccd
