#pragma once

#include <stdexcept>
#include <string>

namespace ssplan {

// Error taxonomy shared by the library and the CLI. Each class maps to a
// distinct process exit code (see commands.hpp).

struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Missing or unreadable file.
struct io_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A file parsed but does not match the expected schema, or a feature
// schema disagrees between producer and consumer.
struct schema_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Input data violates an operation's precondition (NaN features, empty
// session list, length mismatches).
struct data_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Data is structurally fine but carries no usable signal (single-class
// labels, no negative bags).
struct degenerate_data_error : data_error {
    using data_error::data_error;
};

// An MdpModel violates its invariants (T = 0, K = 0, entries outside [0,1]).
struct model_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A path is empty, too long, or indexes outside the action space.
struct path_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Dedup planning requested with fewer items than steps.
struct infeasible_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Exhaustive enumeration would exceed the size guard.
struct size_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace ssplan
