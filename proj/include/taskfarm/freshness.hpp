#pragma once

// Per-block dispatch bookkeeping: each unit of work is either disabled or
// carries a count of how many times it has been handed out. Lower counts are
// fresher and dispatched first.

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "taskfarm/rng.hpp"

namespace taskfarm {

class Freshness {
  public:
    constexpr Freshness() = default;

    static constexpr Freshness disabled() { return Freshness(kDisabled); }
    static constexpr Freshness count(std::uint32_t c) {
        return Freshness(static_cast<std::int64_t>(c));
    }

    constexpr bool is_disabled() const { return raw_ == kDisabled; }
    constexpr std::uint32_t count_value() const {
        return static_cast<std::uint32_t>(raw_);
    }

    constexpr void increment() { ++raw_; }

    constexpr bool operator==(const Freshness&) const = default;

  private:
    static constexpr std::int64_t kDisabled = -1;

    explicit constexpr Freshness(std::int64_t raw) : raw_(raw) {}

    std::int64_t raw_ = kDisabled;
};

using FreshnessVector = std::vector<Freshness>;

// Selects the index of an entry with the minimum non-disabled count,
// breaking ties uniformly with the engine (one draw iff the minimum class
// has at least two members; see rng::uniform_index). Returns nullopt when
// every entry is disabled. Does not modify the vector.
inline std::optional<std::size_t> pick_min_count(const FreshnessVector& s,
                                                 std::mt19937_64& eng) {
    std::optional<std::uint32_t> min;
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i].is_disabled()) {
            continue;
        }
        std::uint32_t c = s[i].count_value();
        if (!min || c < *min) {
            min = c;
            candidates.clear();
            candidates.push_back(i);
        } else if (c == *min) {
            candidates.push_back(i);
        }
    }
    if (candidates.empty()) {
        return std::nullopt;
    }
    return candidates[rng::uniform_index(eng, candidates.size())];
}

}  // namespace taskfarm
