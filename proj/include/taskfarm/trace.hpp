#pragma once

// Deterministic, replayable event log of a simulation. Message records hold
// one delivery each (timestamp = virtual delivery time); alarm, fault and
// straggler-discard events are interleaved at the position they occurred.
// Two runs of the same scenario produce identical traces, byte for byte.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include "taskfarm/protocol.hpp"
#include "taskfarm/scenario.hpp"

namespace taskfarm {

struct MessageRecord {
    Tick time = 0;
    Endpoint sender;
    Endpoint receiver;
    Message msg;
    bool operator==(const MessageRecord&) const = default;
};

struct AlarmRecord {
    Tick time = 0;
    BlockId block;
    std::uint32_t count = 0;
    bool operator==(const AlarmRecord&) const = default;
};

enum class FaultKind : std::uint8_t {
    Crash = 0,
    SlowdownStart = 1,
    SlowdownEnd = 2,
    Rejoin = 3,
};

struct FaultRecord {
    Tick time = 0;
    FaultKind kind = FaultKind::Crash;
    WorkerId worker;
    double factor = 0.0;  // slowdown factor; 0 otherwise
    bool operator==(const FaultRecord&) const = default;
};

// An output whose origin run predates the collector's current run was
// discarded instead of delivered (a too-late straggler).
struct DiscardRecord {
    Tick time = 0;
    BlockId block;
    std::uint32_t origin_run = 0;  // 1-based
    bool operator==(const DiscardRecord&) const = default;
};

using TraceRecord =
    std::variant<MessageRecord, AlarmRecord, FaultRecord, DiscardRecord>;

Tick record_time(const TraceRecord& r);

struct EventTrace {
    std::vector<TraceRecord> records;

    bool operator==(const EventTrace&) const = default;

    // Binary form: an 8-byte magic, then one record per entry — 8-byte LE
    // timestamp, 2-byte packed sender, 2-byte packed receiver, followed by
    // the encoded message. Alarm/fault/discard records reuse the framing
    // with reserved tags outside the message range.
    Bytes to_binary() const;
    static EventTrace from_binary(std::span<const std::uint8_t> bytes);

    // Line-oriented rendering: "t=<ticks> <sender> -> <receiver> <message>".
    std::string to_text() const;

    void write_binary_file(const std::string& path) const;
    static EventTrace read_binary_file(const std::string& path);
};

// Outcome of comparing a stored trace against a re-execution.
struct ReplayEqual {
    bool operator==(const ReplayEqual&) const = default;
};
struct FirstDivergence {
    std::size_t index = 0;  // first differing record (or length mismatch)
    std::string detail;
    bool operator==(const FirstDivergence&) const = default;
};
using ReplayVerdict = std::variant<ReplayEqual, FirstDivergence>;

ReplayVerdict compare_traces(const EventTrace& expected,
                             const EventTrace& actual);

}  // namespace taskfarm
