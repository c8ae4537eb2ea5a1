#pragma once

#include <stdexcept>
#include <string>

namespace taskfarm {

// Base class for every error this library raises on purpose.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Byte sequence is not a valid encoding: unknown tag, truncated payload,
// out-of-range id. Signals a corrupt trace or a protocol violation.
struct MalformedMessage : Error {
    using Error::Error;
};

// Block index outside 1..m for the configured block count.
struct OutOfRangeBlock : Error {
    using Error::Error;
};

// A (mode, message) pair the worker state machine does not admit.
struct ProtocolError : Error {
    using Error::Error;
};

// Image length not divisible by the block count.
struct IndivisibleImage : Error {
    using Error::Error;
};

// Worker id outside 1..n for the configured farm size.
struct UnknownWorker : Error {
    using Error::Error;
};

// Reliability formulas require at least one worker.
struct InvalidCount : Error {
    using Error::Error;
};

// Tuple-space handle whose entry was already removed.
struct StaleHandle : Error {
    using Error::Error;
};

// Scenario file failed structural or semantic validation.
struct InvalidScenario : Error {
    using Error::Error;
};

}  // namespace taskfarm
