#pragma once

#include <stdexcept>
#include <string>

namespace stamp {

// Invalid argument or violated value-level invariant (bad label, empty vector, ...).
struct ValueError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Matrix/tensor dimensions do not line up.
struct ShapeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Bad configuration: unknown key, constraint violation, incompatible modes.
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Malformed file on disk (bag, manifest, checkpoint).
struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Metric is undefined for the given inputs (e.g. AUC with a single class).
struct MetricError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Training aborted: non-finite loss or gradient.
struct TrainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A multi-run experiment failed part-way; message names the failing runs.
struct PartialResultsError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace stamp
