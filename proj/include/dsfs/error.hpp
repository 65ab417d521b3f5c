#pragma once

#include <stdexcept>
#include <string>

namespace dsfs {

// Bad user input: malformed config, out-of-range option, bad flag combination.
class ConfigError : public std::invalid_argument {
public:
    explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

// Bad data: unreadable files, dimension mismatches, inconsistent artifacts.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace dsfs
