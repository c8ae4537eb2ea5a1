#pragma once

// The Farmer, Worker and Collector state machines. Each is a pure transition
// function over its own state: single writer per instance, outputs returned
// as Send lists for the transport to deliver. Hooks must be pure or
// internally synchronized.

#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "taskfarm/protocol.hpp"

namespace taskfarm {

// --- decomposition and input ------------------------------------------

// Splits an image into m equally sized blocks. The concatenation of the
// result equals the input. Throws IndivisibleImage when the length is not
// a multiple of m.
std::vector<Block> decompose(const Bytes& image, std::uint32_t block_count);

// Pull-based input: returns the next image, or nullopt when exhausted.
using ImageSource = std::function<std::optional<Bytes>()>;

// Deterministic pseudo-random "camera": image_count images of image_size
// bytes each, reproducible per (seed, image index).
ImageSource make_synthetic_camera(std::uint64_t seed, std::size_t image_size,
                                  std::uint32_t image_count);

// --- Farmer -------------------------------------------------------------

class Farmer {
  public:
    Farmer(std::uint32_t block_count, ImageSource source);

    // First run: emits (i, b_i) couples for i = 1..m in order, then NewRun,
    // and pre-decomposes the following image. With no input at all, emits
    // Stop instead.
    std::vector<Send> bootstrap();

    // Records the ack; feeds the matching couple of the next run if one is
    // pre-decomposed; on the last ack of a run, either rotates to the next
    // run (emitting NewRun) or emits Stop. Duplicate acks are ignored.
    std::vector<Send> on_block_ack(BlockId k);

    bool finished() const { return finished_; }
    const std::set<BlockId>& acked() const { return acked_; }
    const std::set<BlockId>& sent_next() const { return sent_next_; }
    bool has_next_run() const { return next_blocks_.has_value(); }

  private:
    std::vector<Send> pull_next_run();

    std::uint32_t block_count_;
    ImageSource source_;
    std::vector<Block> current_blocks_;
    std::optional<std::vector<Block>> next_blocks_;
    std::set<BlockId> acked_;
    std::set<BlockId> sent_next_;
    bool finished_ = false;
};

// --- Worker -------------------------------------------------------------

using WorkerFn = std::function<Output(const Block&)>;

enum class WorkerMode { Requesting, Computing, Sleeping, Stopped };

// Virtual-time cost model for the worker function (base duration scaled by
// a per-worker factor; the simulator adds jitter and slowdowns on top).
struct ComputeCost {
    std::uint64_t base_ticks = 1;
    double multiplier = 1.0;
};

// Raised into the worker when its computation's virtual time has elapsed.
struct ComputeComplete {
    bool operator==(const ComputeComplete&) const = default;
};

using WorkerEvent = std::variant<Message, ComputeComplete>;

class Worker {
  public:
    Worker(WorkerId id, WorkerFn fn, ComputeCost cost);

    // One loop step. Throws ProtocolError on a (mode, message) pair the
    // protocol does not admit (e.g. a couple while sleeping).
    std::vector<Send> step(const WorkerEvent& event);

    WorkerId id() const { return id_; }
    WorkerMode mode() const { return mode_; }
    const ComputeCost& cost() const { return cost_; }
    // Valid while mode() == Computing.
    BlockId computing_block() const { return current_block_; }

    // The initial "send j to Dispatcher" of the processing loop.
    Send initial_request() const {
        return {Endpoint::dispatcher(), Request{id_}};
    }

  private:
    std::vector<Send> on_message(const Message& msg);
    std::vector<Send> on_compute_complete();

    WorkerId id_;
    WorkerFn fn_;
    ComputeCost cost_;
    WorkerMode mode_ = WorkerMode::Requesting;
    BlockId current_block_{};
    Block current_input_;
};

// --- Collector ----------------------------------------------------------

// Verdict of the duplicate-output hook.
struct Ignore {
    bool operator==(const Ignore&) const = default;
};
struct Mismatch {
    std::string details;
    bool operator==(const Mismatch&) const = default;
};
using DetectVerdict = std::variant<Ignore, Mismatch>;

using DetectHook =
    std::function<DetectVerdict(BlockId, const Output& existing,
                                const Output& incoming)>;
using PostProcess = std::function<Bytes(const std::vector<Output>&)>;

// Byte-compare, keep the first arrival.
DetectHook default_detect_hook();
// Concatenation in block order.
PostProcess default_post_process();

struct FinalArtifact {
    std::uint32_t run = 0;  // 1-based run index
    Bytes bytes;
    bool operator==(const FinalArtifact&) const = default;
};

struct CollectorResult {
    std::vector<Send> messages;
    std::optional<FinalArtifact> artifact;
    std::optional<DetectVerdict> verdict;
};

class Collector {
  public:
    Collector(std::uint32_t block_count, DetectHook detect = default_detect_hook(),
              PostProcess post_process = default_post_process());

    // FREE slot: ack the dispatcher, store, and on the last slot of the run
    // post-process into a FinalArtifact and reset every flag. BUSY slot:
    // invoke the detect hook; no ack, ledger unchanged.
    CollectorResult on_output(BlockId k, const Output& o);

    // Freezes the ledger; a partially filled run is discarded and counted.
    void on_stop();

    bool stopped() const { return stopped_; }
    std::uint32_t runs_completed() const { return runs_completed_; }
    std::uint32_t duplicate_outputs() const { return duplicate_outputs_; }
    std::uint32_t mismatches() const { return mismatches_; }
    std::uint32_t partials_on_stop() const { return partials_on_stop_; }
    std::uint32_t busy_slots() const;

  private:
    std::uint32_t block_count_;
    DetectHook detect_;
    PostProcess post_process_;
    std::vector<std::optional<Output>> slots_;  // p
    std::vector<bool> busy_;                    // f, true = BUSY
    std::uint32_t runs_completed_ = 0;
    std::uint32_t duplicate_outputs_ = 0;
    std::uint32_t mismatches_ = 0;
    std::uint32_t partials_on_stop_ = 0;
    bool stopped_ = false;
};

// Named deterministic worker functions available to scenario files.
// "identity" copies the block; "invert" flips every byte; "worker_tagged"
// xors the first byte with the worker id (duplicates from different workers
// then differ, exercising the detect hook).
WorkerFn make_worker_fn(const std::string& name, WorkerId id);

}  // namespace taskfarm
