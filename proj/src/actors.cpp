#include "taskfarm/actors.hpp"

#include <algorithm>
#include <memory>

#include "taskfarm/rng.hpp"

namespace taskfarm {

// --- decomposition and input ------------------------------------------

std::vector<Block> decompose(const Bytes& image, std::uint32_t block_count) {
    if (block_count == 0 || image.size() % block_count != 0) {
        throw IndivisibleImage("image of " + std::to_string(image.size()) +
                               " bytes not divisible into " +
                               std::to_string(block_count) + " blocks");
    }
    std::size_t block_size = image.size() / block_count;
    std::vector<Block> blocks;
    blocks.reserve(block_count);
    for (std::uint32_t i = 0; i < block_count; ++i) {
        blocks.push_back(Block{Bytes(
            image.begin() + static_cast<std::ptrdiff_t>(i * block_size),
            image.begin() + static_cast<std::ptrdiff_t>((i + 1) * block_size))});
    }
    return blocks;
}

ImageSource make_synthetic_camera(std::uint64_t seed, std::size_t image_size,
                                  std::uint32_t image_count) {
    auto produced = std::make_shared<std::uint32_t>(0);
    return [=]() -> std::optional<Bytes> {
        if (*produced >= image_count) {
            return std::nullopt;
        }
        std::uint32_t index = (*produced)++;
        auto eng = rng::engine(rng::substream(seed, index));
        Bytes image(image_size);
        for (auto& b : image) {
            b = static_cast<std::uint8_t>(eng());
        }
        return image;
    };
}

// --- Farmer -------------------------------------------------------------

Farmer::Farmer(std::uint32_t block_count, ImageSource source)
    : block_count_(block_count), source_(std::move(source)) {}

std::vector<Send> Farmer::bootstrap() {
    std::optional<Bytes> first = source_();
    if (!first) {
        finished_ = true;
        return {{Endpoint::dispatcher(), Stop{}}};
    }
    current_blocks_ = decompose(*first, block_count_);
    std::vector<Send> out;
    out.reserve(block_count_ + 1);
    for (std::uint32_t i = 1; i <= block_count_; ++i) {
        out.push_back({Endpoint::dispatcher(),
                       BlockCouple{BlockId{i}, current_blocks_[i - 1]}});
    }
    out.push_back({Endpoint::dispatcher(), NewRun{}});
    if (std::optional<Bytes> second = source_()) {
        next_blocks_ = decompose(*second, block_count_);
    }
    return out;
}

std::vector<Send> Farmer::on_block_ack(BlockId k) {
    if (k.value == 0 || k.value > block_count_) {
        throw OutOfRangeBlock("ack for block " + std::to_string(k.value));
    }
    if (finished_ || acked_.count(k) != 0) {
        return {};
    }
    acked_.insert(k);

    std::vector<Send> out;
    if (next_blocks_ && sent_next_.count(k) == 0) {
        // Anticipate the couple of the next run for the freed slot.
        out.push_back({Endpoint::dispatcher(),
                       BlockCouple{k, (*next_blocks_)[k.value - 1]}});
        sent_next_.insert(k);
    }
    if (acked_.size() == block_count_) {
        if (next_blocks_) {
            out.push_back({Endpoint::dispatcher(), NewRun{}});
            current_blocks_ = std::move(*next_blocks_);
            next_blocks_.reset();
            acked_.clear();
            sent_next_.clear();
            if (std::optional<Bytes> img = source_()) {
                next_blocks_ = decompose(*img, block_count_);
            }
        } else {
            out.push_back({Endpoint::dispatcher(), Stop{}});
            finished_ = true;
        }
    }
    return out;
}

// --- Worker -------------------------------------------------------------

Worker::Worker(WorkerId id, WorkerFn fn, ComputeCost cost)
    : id_(id), fn_(std::move(fn)), cost_(cost) {}

std::vector<Send> Worker::step(const WorkerEvent& event) {
    if (mode_ == WorkerMode::Stopped) {
        throw ProtocolError("worker " + std::to_string(id_.value) +
                            " stepped after stop");
    }
    if (const Message* msg = std::get_if<Message>(&event)) {
        return on_message(*msg);
    }
    return on_compute_complete();
}

std::vector<Send> Worker::on_message(const Message& msg) {
    if (std::holds_alternative<Stop>(msg)) {
        mode_ = WorkerMode::Stopped;
        return {};
    }
    if (const WorkCouple* couple = std::get_if<WorkCouple>(&msg)) {
        if (mode_ != WorkerMode::Requesting) {
            throw ProtocolError("worker " + std::to_string(id_.value) +
                                " got a couple while not requesting");
        }
        mode_ = WorkerMode::Computing;
        current_block_ = couple->id;
        current_input_ = couple->block;
        return {};
    }
    if (std::holds_alternative<Sleep>(msg)) {
        if (mode_ != WorkerMode::Requesting && mode_ != WorkerMode::Sleeping) {
            throw ProtocolError("worker " + std::to_string(id_.value) +
                                " got SLEEP while computing");
        }
        mode_ = WorkerMode::Sleeping;
        return {};
    }
    if (std::holds_alternative<Resume>(msg)) {
        switch (mode_) {
            case WorkerMode::Computing:
                // Abandon: no output, restart the loop.
                mode_ = WorkerMode::Requesting;
                return {{Endpoint::dispatcher(), Request{id_}}};
            case WorkerMode::Sleeping:
                mode_ = WorkerMode::Requesting;
                return {{Endpoint::dispatcher(), Request{id_}}};
            case WorkerMode::Requesting:
                // Stale resume: the forced resume or a broadcast crossed our
                // request in flight. A reply is already on its way.
                return {};
            default:
                break;
        }
    }
    throw ProtocolError("worker " + std::to_string(id_.value) +
                        " cannot handle " + message_to_string(msg));
}

std::vector<Send> Worker::on_compute_complete() {
    if (mode_ != WorkerMode::Computing) {
        throw ProtocolError("worker " + std::to_string(id_.value) +
                            " completed while not computing");
    }
    Output out = fn_(current_input_);
    mode_ = WorkerMode::Requesting;
    return {
        {Endpoint::collector(), OutputCouple{current_block_, std::move(out)}},
        {Endpoint::dispatcher(), Request{id_}},
    };
}

// --- Collector ----------------------------------------------------------

DetectHook default_detect_hook() {
    return [](BlockId k, const Output& existing,
              const Output& incoming) -> DetectVerdict {
        if (existing == incoming) {
            return Ignore{};
        }
        return Mismatch{"block " + std::to_string(k.value) +
                        ": duplicate outputs differ"};
    };
}

PostProcess default_post_process() {
    return [](const std::vector<Output>& outputs) {
        Bytes joined;
        for (const Output& o : outputs) {
            joined.insert(joined.end(), o.payload.begin(), o.payload.end());
        }
        return joined;
    };
}

Collector::Collector(std::uint32_t block_count, DetectHook detect,
                     PostProcess post_process)
    : block_count_(block_count),
      detect_(std::move(detect)),
      post_process_(std::move(post_process)),
      slots_(block_count),
      busy_(block_count, false) {}

CollectorResult Collector::on_output(BlockId k, const Output& o) {
    if (k.value == 0 || k.value > block_count_) {
        throw OutOfRangeBlock("output for block " + std::to_string(k.value));
    }
    CollectorResult result;
    std::size_t i = k.value - 1;
    if (!busy_[i]) {
        result.messages.push_back({Endpoint::dispatcher(), SlotAck{k}});
        slots_[i] = o;
        busy_[i] = true;
        if (std::all_of(busy_.begin(), busy_.end(), [](bool b) { return b; })) {
            std::vector<Output> outputs;
            outputs.reserve(block_count_);
            for (auto& slot : slots_) {
                outputs.push_back(std::move(*slot));
            }
            ++runs_completed_;
            result.artifact = FinalArtifact{runs_completed_,
                                            post_process_(outputs)};
            std::fill(busy_.begin(), busy_.end(), false);
            for (auto& slot : slots_) {
                slot.reset();
            }
        }
    } else {
        ++duplicate_outputs_;
        DetectVerdict verdict = detect_(k, *slots_[i], o);
        if (std::holds_alternative<Mismatch>(verdict)) {
            ++mismatches_;
        }
        result.verdict = verdict;
    }
    return result;
}

void Collector::on_stop() {
    if (stopped_) {
        return;
    }
    stopped_ = true;
    partials_on_stop_ = busy_slots();
}

std::uint32_t Collector::busy_slots() const {
    return static_cast<std::uint32_t>(
        std::count(busy_.begin(), busy_.end(), true));
}

// --- worker function registry -------------------------------------------

WorkerFn make_worker_fn(const std::string& name, WorkerId id) {
    if (name == "identity") {
        return [](const Block& b) { return Output{b.payload}; };
    }
    if (name == "invert") {
        return [](const Block& b) {
            Bytes out = b.payload;
            for (auto& byte : out) {
                byte = static_cast<std::uint8_t>(~byte);
            }
            return Output{out};
        };
    }
    if (name == "worker_tagged") {
        return [id](const Block& b) {
            Bytes out = b.payload;
            if (!out.empty()) {
                out[0] ^= static_cast<std::uint8_t>(id.value);
            }
            return Output{out};
        };
    }
    throw Error("unknown worker function: " + name);
}

}  // namespace taskfarm
