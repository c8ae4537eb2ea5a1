#include "taskfarm/trace.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace taskfarm {

namespace {

constexpr char kMagic[8] = {'T', 'F', 'T', 'R', '0', '0', '0', '1'};

// Trace-layer record tags, deliberately outside the message tag range so
// decode_message keeps rejecting them.
constexpr std::uint8_t kAlarmTag = 0xA0;
constexpr std::uint8_t kFaultTag = 0xA1;
constexpr std::uint8_t kDiscardTag = 0xA2;

void put_u16(Bytes& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(Bytes& out, std::uint32_t v) {
    put_u16(out, static_cast<std::uint16_t>(v));
    put_u16(out, static_cast<std::uint16_t>(v >> 16));
}

void put_u64(Bytes& out, std::uint64_t v) {
    put_u32(out, static_cast<std::uint32_t>(v));
    put_u32(out, static_cast<std::uint32_t>(v >> 32));
}

struct Cursor {
    std::span<const std::uint8_t> bytes;
    std::size_t pos = 0;

    bool done() const { return pos >= bytes.size(); }

    void need(std::size_t count, const char* what) {
        if (bytes.size() - pos < count) {
            throw MalformedMessage(std::string("truncated trace: ") + what +
                                   " at offset " + std::to_string(pos));
        }
    }

    std::uint8_t peek() {
        need(1, "record tag");
        return bytes[pos];
    }

    std::uint8_t u8() {
        need(1, "u8");
        return bytes[pos++];
    }

    std::uint16_t u16() {
        need(2, "u16");
        std::uint16_t v = static_cast<std::uint16_t>(
            bytes[pos] | (static_cast<std::uint16_t>(bytes[pos + 1]) << 8));
        pos += 2;
        return v;
    }

    std::uint32_t u32() {
        std::uint32_t lo = u16();
        std::uint32_t hi = u16();
        return lo | (hi << 16);
    }

    std::uint64_t u64() {
        std::uint64_t lo = u32();
        std::uint64_t hi = u32();
        return lo | (hi << 32);
    }
};

}  // namespace

Tick record_time(const TraceRecord& r) {
    return std::visit([](const auto& rec) { return rec.time; }, r);
}

Bytes EventTrace::to_binary() const {
    Bytes out(std::begin(kMagic), std::end(kMagic));
    for (const TraceRecord& record : records) {
        std::visit(
            [&](const auto& rec) {
                using T = std::decay_t<decltype(rec)>;
                put_u64(out, rec.time);
                if constexpr (std::is_same_v<T, MessageRecord>) {
                    put_u16(out, rec.sender.pack());
                    put_u16(out, rec.receiver.pack());
                    encode_message(rec.msg, out);
                } else if constexpr (std::is_same_v<T, AlarmRecord>) {
                    put_u16(out, Endpoint::dispatcher().pack());
                    put_u16(out, Endpoint::dispatcher().pack());
                    out.push_back(kAlarmTag);
                    put_u32(out, rec.block.value);
                    put_u32(out, rec.count);
                } else if constexpr (std::is_same_v<T, FaultRecord>) {
                    auto ep = Endpoint::worker(rec.worker).pack();
                    put_u16(out, ep);
                    put_u16(out, ep);
                    out.push_back(kFaultTag);
                    out.push_back(static_cast<std::uint8_t>(rec.kind));
                    put_u32(out, rec.worker.value);
                    put_u64(out, std::bit_cast<std::uint64_t>(rec.factor));
                } else {
                    put_u16(out, Endpoint::collector().pack());
                    put_u16(out, Endpoint::collector().pack());
                    out.push_back(kDiscardTag);
                    put_u32(out, rec.block.value);
                    put_u32(out, rec.origin_run);
                }
            },
            record);
    }
    return out;
}

EventTrace EventTrace::from_binary(std::span<const std::uint8_t> bytes) {
    Cursor c{bytes};
    c.need(sizeof(kMagic), "magic");
    if (std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
        throw MalformedMessage("not a trace file (bad magic)");
    }
    c.pos = sizeof(kMagic);

    EventTrace trace;
    while (!c.done()) {
        Tick time = c.u64();
        Endpoint sender = Endpoint::unpack(c.u16());
        Endpoint receiver = Endpoint::unpack(c.u16());
        std::uint8_t tag = c.peek();
        if (tag == kAlarmTag) {
            c.u8();
            AlarmRecord rec;
            rec.time = time;
            std::uint32_t block = c.u32();
            if (block == 0) {
                throw MalformedMessage("alarm record with block id 0");
            }
            rec.block = BlockId{block};
            rec.count = c.u32();
            trace.records.emplace_back(rec);
        } else if (tag == kFaultTag) {
            c.u8();
            FaultRecord rec;
            rec.time = time;
            std::uint8_t kind = c.u8();
            if (kind > static_cast<std::uint8_t>(FaultKind::Rejoin)) {
                throw MalformedMessage("fault record with unknown kind " +
                                       std::to_string(kind));
            }
            rec.kind = static_cast<FaultKind>(kind);
            std::uint32_t worker = c.u32();
            if (worker == 0) {
                throw MalformedMessage("fault record with worker id 0");
            }
            rec.worker = WorkerId{worker};
            rec.factor = std::bit_cast<double>(c.u64());
            trace.records.emplace_back(rec);
        } else if (tag == kDiscardTag) {
            c.u8();
            DiscardRecord rec;
            rec.time = time;
            std::uint32_t block = c.u32();
            if (block == 0) {
                throw MalformedMessage("discard record with block id 0");
            }
            rec.block = BlockId{block};
            rec.origin_run = c.u32();
            trace.records.emplace_back(rec);
        } else {
            MessageRecord rec;
            rec.time = time;
            rec.sender = sender;
            rec.receiver = receiver;
            rec.msg = decode_message(bytes, c.pos);
            trace.records.emplace_back(std::move(rec));
        }
    }
    return trace;
}

std::string EventTrace::to_text() const {
    std::ostringstream os;
    for (const TraceRecord& record : records) {
        std::visit(
            [&](const auto& rec) {
                using T = std::decay_t<decltype(rec)>;
                os << "t=" << rec.time << ' ';
                if constexpr (std::is_same_v<T, MessageRecord>) {
                    os << rec.sender.to_string() << " -> "
                       << rec.receiver.to_string() << ' '
                       << message_to_string(rec.msg);
                } else if constexpr (std::is_same_v<T, AlarmRecord>) {
                    os << "dispatcher -> dispatcher ALARM block="
                       << rec.block.value << " count=" << rec.count;
                } else if constexpr (std::is_same_v<T, FaultRecord>) {
                    auto ep = Endpoint::worker(rec.worker).to_string();
                    os << ep << " -> " << ep << " FAULT ";
                    switch (rec.kind) {
                        case FaultKind::Crash: os << "crash"; break;
                        case FaultKind::SlowdownStart:
                            os << "slowdown factor=" << rec.factor;
                            break;
                        case FaultKind::SlowdownEnd: os << "slowdown_end"; break;
                        case FaultKind::Rejoin: os << "rejoin"; break;
                    }
                } else {
                    os << "collector -> collector DISCARD block="
                       << rec.block.value << " origin_run=" << rec.origin_run;
                }
                os << '\n';
            },
            record);
    }
    return os.str();
}

void EventTrace::write_binary_file(const std::string& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error("cannot write trace file: " + path);
    }
    Bytes bytes = to_binary();
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
}

EventTrace EventTrace::read_binary_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open trace file: " + path);
    }
    Bytes bytes((std::istreambuf_iterator<char>(in)),
                std::istreambuf_iterator<char>());
    return from_binary(bytes);
}

ReplayVerdict compare_traces(const EventTrace& expected,
                             const EventTrace& actual) {
    std::size_t n = std::min(expected.records.size(), actual.records.size());
    for (std::size_t i = 0; i < n; ++i) {
        if (!(expected.records[i] == actual.records[i])) {
            return FirstDivergence{i, "records differ at index " +
                                          std::to_string(i)};
        }
    }
    if (expected.records.size() != actual.records.size()) {
        return FirstDivergence{
            n, "trace lengths differ: " + std::to_string(expected.records.size()) +
                   " vs " + std::to_string(actual.records.size())};
    }
    return ReplayEqual{};
}

}  // namespace taskfarm
