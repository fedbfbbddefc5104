#pragma once

#include <stdexcept>
#include <string>

namespace posthoc {

/// Domain or precondition violation (bad labels, shapes, parameters).
/// Maps to CLI exit code 1.
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Malformed on-disk data (bad magic, truncated blob, bogus manifest).
/// Maps to CLI exit code 2.
struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Training diverged (non-finite loss); carries the offending step.
struct TrainingError : std::runtime_error {
    TrainingError(const std::string& what, long step)
        : std::runtime_error(what), step(step) {}
    long step;
};

}  // namespace posthoc
