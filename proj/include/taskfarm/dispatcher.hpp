#pragma once

// The dispatcher state machine: answers worker requests with the freshest
// enabled block (or Sleep), disables blocks on collector acks, forces
// resumption of workers whose block was collected elsewhere, and propagates
// NEW_RUN / STOP. Every operation is a synchronous transition
// (state, input) -> (state, outputs); the transport serializes inputs.

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <variant>
#include <vector>

#include "taskfarm/freshness.hpp"
#include "taskfarm/protocol.hpp"

namespace taskfarm {

// Raised when a block's pick count exceeds the configured threshold: too
// many workers are dealing with the same input data. Observational; the
// harness chooses the policy.
struct AlarmEvent {
    BlockId block;
    std::uint32_t count = 0;
    bool operator==(const AlarmEvent&) const = default;
};

// Reply to a worker request: a work couple or an order to sleep.
struct WorkAssignment {
    BlockId block;
    Block data;
    bool operator==(const WorkAssignment&) const = default;
};
struct SleepAssignment {
    bool operator==(const SleepAssignment&) const = default;
};
using Assignment = std::variant<WorkAssignment, SleepAssignment>;

class Dispatcher {
  public:
    Dispatcher(std::uint32_t block_count, std::uint32_t worker_count,
               std::uint32_t threshold, std::uint64_t seed);

    // Stores b into the work buffer for k and disables k. No messages.
    void on_block_couple(BlockId k, const Block& b);

    // Zeroes every freshness entry, clears sleepers and assignments, and
    // broadcasts Resume to the whole farm.
    std::vector<Send> on_new_run();

    // Serves worker j: picks an enabled block of minimum count (seeded
    // uniform tie-break), increments it and records the assignment, or
    // returns Sleep when every entry is disabled. A request implicitly
    // clears j's stale assignment and sleeper status.
    Assignment select_block(WorkerId j);

    // Post-increment check, to be called after select_block handed out l:
    // alarm iff the count at l is strictly greater than the threshold.
    std::optional<AlarmEvent> check_threshold(BlockId l) const;

    // Disables k, acks the farmer, and forces every worker still assigned
    // to k to resume its processing loop.
    std::vector<Send> on_slot_ack(BlockId k);

    // Stop fan-out to all workers and the collector.
    std::vector<Send> on_stop() const;

    std::uint32_t block_count() const { return block_count_; }
    std::uint32_t worker_count() const { return worker_count_; }
    std::uint32_t threshold() const { return threshold_; }
    const FreshnessVector& freshness() const { return freshness_; }
    const std::map<WorkerId, BlockId>& assignments() const {
        return assignments_;
    }
    const std::set<WorkerId>& sleepers() const { return sleepers_; }
    // Number of NEW_RUN messages processed so far.
    std::uint32_t runs_started() const { return runs_started_; }

  private:
    void check_block_range(BlockId k) const;

    std::uint32_t block_count_;
    std::uint32_t worker_count_;
    std::uint32_t threshold_;
    FreshnessVector freshness_;             // s, pre-initialized to disabled
    std::vector<std::optional<Block>> work_buffers_;  // w
    std::map<WorkerId, BlockId> assignments_;
    std::set<WorkerId> sleepers_;
    std::uint32_t runs_started_ = 0;
    std::mt19937_64 rng_;
};

}  // namespace taskfarm
