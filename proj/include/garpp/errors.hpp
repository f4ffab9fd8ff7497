#pragma once

#include <stdexcept>

namespace garpp {

// Error taxonomy shared by the library and the CLI exit-code mapping:
// format_error -> 2 (malformed input / config), precondition_error -> 3
// (contract violation such as n < 4f+3), numeric_error -> 4.
struct format_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct precondition_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct numeric_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace garpp
