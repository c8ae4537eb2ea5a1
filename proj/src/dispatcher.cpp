#include "taskfarm/dispatcher.hpp"

#include <string>

namespace taskfarm {

Dispatcher::Dispatcher(std::uint32_t block_count, std::uint32_t worker_count,
                       std::uint32_t threshold, std::uint64_t seed)
    : block_count_(block_count),
      worker_count_(worker_count),
      threshold_(threshold),
      freshness_(block_count, Freshness::disabled()),
      work_buffers_(block_count),
      rng_(rng::engine(seed)) {}

void Dispatcher::check_block_range(BlockId k) const {
    if (k.value == 0 || k.value > block_count_) {
        throw OutOfRangeBlock("block id " + std::to_string(k.value) +
                              " outside 1.." + std::to_string(block_count_));
    }
}

void Dispatcher::on_block_couple(BlockId k, const Block& b) {
    check_block_range(k);
    freshness_[k.value - 1] = Freshness::disabled();
    work_buffers_[k.value - 1] = b;
}

std::vector<Send> Dispatcher::on_new_run() {
    for (auto& entry : freshness_) {
        entry = Freshness::count(0);
    }
    sleepers_.clear();
    assignments_.clear();
    ++runs_started_;
    std::vector<Send> out;
    out.reserve(worker_count_);
    for (std::uint32_t j = 1; j <= worker_count_; ++j) {
        out.push_back({Endpoint::worker(WorkerId{j}), Resume{}});
    }
    return out;
}

Assignment Dispatcher::select_block(WorkerId j) {
    // A request means j finished or abandoned whatever it was doing.
    assignments_.erase(j);
    sleepers_.erase(j);

    std::optional<std::size_t> picked = pick_min_count(freshness_, rng_);
    if (!picked) {
        sleepers_.insert(j);
        return SleepAssignment{};
    }
    std::size_t l = *picked;
    freshness_[l].increment();
    BlockId id{static_cast<std::uint32_t>(l + 1)};
    assignments_[j] = id;
    return WorkAssignment{id, work_buffers_[l].value_or(Block{})};
}

std::optional<AlarmEvent> Dispatcher::check_threshold(BlockId l) const {
    check_block_range(l);
    const Freshness& entry = freshness_[l.value - 1];
    if (entry.is_disabled()) {
        return std::nullopt;
    }
    if (entry.count_value() > threshold_) {
        return AlarmEvent{l, entry.count_value()};
    }
    return std::nullopt;
}

std::vector<Send> Dispatcher::on_slot_ack(BlockId k) {
    check_block_range(k);
    freshness_[k.value - 1] = Freshness::disabled();

    std::vector<Send> out;
    out.push_back({Endpoint::farmer(), BlockAck{k}});
    // Workers still computing k lost the race; force them back to the loop.
    for (auto it = assignments_.begin(); it != assignments_.end();) {
        if (it->second == k) {
            out.push_back({Endpoint::worker(it->first), Resume{}});
            it = assignments_.erase(it);
        } else {
            ++it;
        }
    }
    return out;
}

std::vector<Send> Dispatcher::on_stop() const {
    std::vector<Send> out;
    out.reserve(worker_count_ + 1);
    for (std::uint32_t j = 1; j <= worker_count_; ++j) {
        out.push_back({Endpoint::worker(WorkerId{j}), Stop{}});
    }
    out.push_back({Endpoint::collector(), Stop{}});
    return out;
}

}  // namespace taskfarm
