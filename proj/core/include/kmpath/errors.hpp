#pragma once

#include <stdexcept>
#include <string>

namespace kmpath {

// Invalid or inconsistent user input: malformed config files, bad parameter
// values, schema violations. Maps to process exit code 2.
class config_error : public std::runtime_error {
public:
  explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

// Runtime numerical failure: path divergence, solver breakdown, insufficient
// data, unreachable endpoints. Maps to process exit code 3.
class numeric_error : public std::runtime_error {
public:
  explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace kmpath
