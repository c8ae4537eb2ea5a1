#include "taskfarm/protocol.hpp"

#include <sstream>

namespace taskfarm {

namespace {

// Variant tags. 0 is reserved invalid; 0xA0.. is reserved for trace-layer
// event records and must never appear here.
enum Tag : std::uint8_t {
    kNewRun = 1,
    kStop = 2,
    kBlockCouple = 3,
    kBlockAck = 4,
    kSleep = 5,
    kResume = 6,
    kWorkCouple = 7,
    kRequest = 8,
    kOutputCouple = 9,
    kSlotAck = 10,
};

void put_u32(Bytes& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 24));
}

void put_bytes(Bytes& out, const Bytes& payload) {
    put_u32(out, static_cast<std::uint32_t>(payload.size()));
    out.insert(out.end(), payload.begin(), payload.end());
}

struct Reader {
    std::span<const std::uint8_t> bytes;
    std::size_t pos;

    std::uint8_t u8() {
        if (pos >= bytes.size()) {
            throw MalformedMessage("truncated message: expected byte at offset " +
                                   std::to_string(pos));
        }
        return bytes[pos++];
    }

    std::uint32_t u32() {
        if (bytes.size() - pos < 4 || pos > bytes.size()) {
            throw MalformedMessage("truncated message: expected u32 at offset " +
                                   std::to_string(pos));
        }
        std::uint32_t v = static_cast<std::uint32_t>(bytes[pos]) |
                          (static_cast<std::uint32_t>(bytes[pos + 1]) << 8) |
                          (static_cast<std::uint32_t>(bytes[pos + 2]) << 16) |
                          (static_cast<std::uint32_t>(bytes[pos + 3]) << 24);
        pos += 4;
        return v;
    }

    Bytes payload() {
        std::uint32_t len = u32();
        if (bytes.size() - pos < len) {
            throw MalformedMessage("truncated payload: need " +
                                   std::to_string(len) + " bytes at offset " +
                                   std::to_string(pos));
        }
        Bytes out(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                  bytes.begin() + static_cast<std::ptrdiff_t>(pos + len));
        pos += len;
        return out;
    }

    BlockId block_id() {
        std::uint32_t v = u32();
        if (v == 0) {
            throw MalformedMessage("block id 0 is out of range");
        }
        return BlockId{v};
    }

    WorkerId worker_id() {
        std::uint32_t v = u32();
        if (v == 0) {
            throw MalformedMessage("worker id 0 is out of range");
        }
        return WorkerId{v};
    }
};

}  // namespace

std::uint16_t Endpoint::pack() const {
    return static_cast<std::uint16_t>(
        (static_cast<std::uint16_t>(role) << 14) | (index & 0x3fff));
}

Endpoint Endpoint::unpack(std::uint16_t raw) {
    Endpoint e;
    e.role = static_cast<Role>((raw >> 14) & 0x3);
    e.index = static_cast<std::uint16_t>(raw & 0x3fff);
    return e;
}

std::string Endpoint::to_string() const {
    switch (role) {
        case Role::Farmer: return "farmer";
        case Role::Dispatcher: return "dispatcher";
        case Role::Collector: return "collector";
        case Role::Worker: return "worker[" + std::to_string(index) + "]";
    }
    return "?";
}

void encode_message(const Message& msg, Bytes& out) {
    std::visit(
        [&](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, NewRun>) {
                out.push_back(kNewRun);
            } else if constexpr (std::is_same_v<T, Stop>) {
                out.push_back(kStop);
            } else if constexpr (std::is_same_v<T, BlockCouple>) {
                out.push_back(kBlockCouple);
                put_u32(out, m.id.value);
                put_bytes(out, m.block.payload);
            } else if constexpr (std::is_same_v<T, BlockAck>) {
                out.push_back(kBlockAck);
                put_u32(out, m.id.value);
            } else if constexpr (std::is_same_v<T, Sleep>) {
                out.push_back(kSleep);
            } else if constexpr (std::is_same_v<T, Resume>) {
                out.push_back(kResume);
            } else if constexpr (std::is_same_v<T, WorkCouple>) {
                out.push_back(kWorkCouple);
                put_u32(out, m.id.value);
                put_bytes(out, m.block.payload);
            } else if constexpr (std::is_same_v<T, Request>) {
                out.push_back(kRequest);
                put_u32(out, m.worker.value);
            } else if constexpr (std::is_same_v<T, OutputCouple>) {
                out.push_back(kOutputCouple);
                put_u32(out, m.id.value);
                put_bytes(out, m.output.payload);
            } else if constexpr (std::is_same_v<T, SlotAck>) {
                out.push_back(kSlotAck);
                put_u32(out, m.id.value);
            }
        },
        msg);
}

Bytes encode_message(const Message& msg) {
    Bytes out;
    encode_message(msg, out);
    return out;
}

Message decode_message(std::span<const std::uint8_t> bytes, std::size_t& pos) {
    Reader r{bytes, pos};
    std::uint8_t tag = r.u8();
    Message msg;
    switch (tag) {
        case kNewRun:
            msg = NewRun{};
            break;
        case kStop:
            msg = Stop{};
            break;
        case kBlockCouple: {
            BlockId id = r.block_id();
            msg = BlockCouple{id, Block{r.payload()}};
            break;
        }
        case kBlockAck:
            msg = BlockAck{r.block_id()};
            break;
        case kSleep:
            msg = Sleep{};
            break;
        case kResume:
            msg = Resume{};
            break;
        case kWorkCouple: {
            BlockId id = r.block_id();
            msg = WorkCouple{id, Block{r.payload()}};
            break;
        }
        case kRequest:
            msg = Request{r.worker_id()};
            break;
        case kOutputCouple: {
            BlockId id = r.block_id();
            msg = OutputCouple{id, Output{r.payload()}};
            break;
        }
        case kSlotAck:
            msg = SlotAck{r.block_id()};
            break;
        default:
            throw MalformedMessage("unknown message tag " + std::to_string(tag));
    }
    pos = r.pos;
    return msg;
}

Message decode_message(std::span<const std::uint8_t> bytes) {
    std::size_t pos = 0;
    Message msg = decode_message(bytes, pos);
    if (pos != bytes.size()) {
        throw MalformedMessage("trailing bytes after message: " +
                               std::to_string(bytes.size() - pos));
    }
    return msg;
}

std::string message_to_string(const Message& msg) {
    std::ostringstream os;
    std::visit(
        [&](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, NewRun>) {
                os << "NEW_RUN";
            } else if constexpr (std::is_same_v<T, Stop>) {
                os << "STOP";
            } else if constexpr (std::is_same_v<T, BlockCouple>) {
                os << "BLOCK_COUPLE k=" << m.id.value
                   << " len=" << m.block.payload.size();
            } else if constexpr (std::is_same_v<T, BlockAck>) {
                os << "BLOCK_ACK k=" << m.id.value;
            } else if constexpr (std::is_same_v<T, Sleep>) {
                os << "SLEEP";
            } else if constexpr (std::is_same_v<T, Resume>) {
                os << "RESUME";
            } else if constexpr (std::is_same_v<T, WorkCouple>) {
                os << "WORK_COUPLE k=" << m.id.value
                   << " len=" << m.block.payload.size();
            } else if constexpr (std::is_same_v<T, Request>) {
                os << "REQUEST j=" << m.worker.value;
            } else if constexpr (std::is_same_v<T, OutputCouple>) {
                os << "OUTPUT_COUPLE k=" << m.id.value
                   << " len=" << m.output.payload.size();
            } else if constexpr (std::is_same_v<T, SlotAck>) {
                os << "SLOT_ACK k=" << m.id.value;
            }
        },
        msg);
    return os.str();
}

}  // namespace taskfarm
