#pragma once

#include <stdexcept>
#include <string>

namespace csqa {

// Malformed input: unreadable files, bad record syntax, broken formats.
// The CLI maps this class to exit code 2.
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Semantically inconsistent input: count mismatches, disjoint id sets,
// failed runs. The CLI maps this class to exit code 1.
struct SemanticError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace csqa
