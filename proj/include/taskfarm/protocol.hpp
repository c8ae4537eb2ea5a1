#pragma once

// Wire protocol of the farm: every message variant exchanged among the
// Farmer, Dispatcher, Worker and Collector roles, plus the canonical byte
// encoding used by trace files. Values are immutable and freely copyable.

#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "taskfarm/errors.hpp"

namespace taskfarm {

using Bytes = std::vector<std::uint8_t>;

// Block index, 1-based: 1..m for the configured block count m.
struct BlockId {
    std::uint32_t value = 0;
    auto operator<=>(const BlockId&) const = default;
};

// Worker index, 1-based: 1..n for the configured farm size n.
struct WorkerId {
    std::uint32_t value = 0;
    auto operator<=>(const WorkerId&) const = default;
};

// One unit of work: an opaque slice of the decomposed input.
struct Block {
    Bytes payload;
    bool operator==(const Block&) const = default;
};

// Result of applying the worker function to a block.
struct Output {
    Bytes payload;
    bool operator==(const Output&) const = default;
};

// --- message variants -------------------------------------------------

// Farmer -> Dispatcher: a new bunch of data is available.
struct NewRun {
    bool operator==(const NewRun&) const = default;
};

// Farmer -> Dispatcher, Dispatcher -> Worker, Dispatcher -> Collector:
// no more input, terminate.
struct Stop {
    bool operator==(const Stop&) const = default;
};

// Farmer -> Dispatcher: block data for the identified slot.
struct BlockCouple {
    BlockId id;
    Block block;
    bool operator==(const BlockCouple&) const = default;
};

// Dispatcher -> Farmer: the identified block has been collected.
struct BlockAck {
    BlockId id;
    bool operator==(const BlockAck&) const = default;
};

// Dispatcher -> Worker: wait until resumed.
struct Sleep {
    bool operator==(const Sleep&) const = default;
};

// Dispatcher -> Worker: leave the waiting state, or abandon the current
// computation and request again.
struct Resume {
    bool operator==(const Resume&) const = default;
};

// Dispatcher -> Worker: input data to elaborate.
struct WorkCouple {
    BlockId id;
    Block block;
    bool operator==(const WorkCouple&) const = default;
};

// Worker -> Dispatcher: the worker is available for a new couple.
struct Request {
    WorkerId worker;
    bool operator==(const Request&) const = default;
};

// Worker -> Collector: fully processed output for a block.
struct OutputCouple {
    BlockId id;
    Output output;
    bool operator==(const OutputCouple&) const = default;
};

// Collector -> Dispatcher: an output slot has been occupied.
struct SlotAck {
    BlockId id;
    bool operator==(const SlotAck&) const = default;
};

// Closed union: decoding never yields anything outside this list.
using Message = std::variant<NewRun, Stop, BlockCouple, BlockAck, Sleep,
                             Resume, WorkCouple, Request, OutputCouple,
                             SlotAck>;

// --- endpoints --------------------------------------------------------

enum class Role : std::uint8_t {
    Farmer = 0,
    Dispatcher = 1,
    Worker = 2,
    Collector = 3,
};

// Addressable process: role plus index (worker id for workers, 0 otherwise).
// Packs into the 2-byte role+index field of trace records: role in the top
// two bits, index in the low 14.
struct Endpoint {
    Role role = Role::Farmer;
    std::uint16_t index = 0;

    static Endpoint farmer() { return {Role::Farmer, 0}; }
    static Endpoint dispatcher() { return {Role::Dispatcher, 0}; }
    static Endpoint collector() { return {Role::Collector, 0}; }
    static Endpoint worker(WorkerId id) {
        return {Role::Worker, static_cast<std::uint16_t>(id.value)};
    }

    std::uint16_t pack() const;
    static Endpoint unpack(std::uint16_t raw);
    std::string to_string() const;

    auto operator<=>(const Endpoint&) const = default;
};

// An outbound message with its destination; the sender is implied by
// whichever actor produced it.
struct Send {
    Endpoint to;
    Message msg;
    bool operator==(const Send&) const = default;
};

// --- codec ------------------------------------------------------------

// Appends the self-delimiting encoding of msg: a fixed one-byte variant tag,
// 32-bit little-endian ids, and length-prefixed payloads.
void encode_message(const Message& msg, Bytes& out);
Bytes encode_message(const Message& msg);

// Decodes one message starting at `pos`, advancing `pos` past it.
// Throws MalformedMessage on unknown tag, truncated payload, or a zero id.
Message decode_message(std::span<const std::uint8_t> bytes, std::size_t& pos);

// Decodes a buffer holding exactly one message; trailing bytes are malformed.
Message decode_message(std::span<const std::uint8_t> bytes);

// Human-readable rendering used by text traces, e.g. "WORK_COUPLE k=3 len=8".
std::string message_to_string(const Message& msg);

}  // namespace taskfarm
