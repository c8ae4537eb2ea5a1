#pragma once

// Declarative simulation scenarios: farm geometry, cost and latency models,
// the fault schedule, and the seed. A scenario file fully determines a run.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "taskfarm/protocol.hpp"

namespace taskfarm {

using Tick = std::uint64_t;

// --- faults -------------------------------------------------------------

struct CrashFault {
    WorkerId worker;
    Tick at = 0;
    bool operator==(const CrashFault&) const = default;
};

struct SlowdownFault {
    WorkerId worker;
    double factor = 1.0;  // >= 1
    Tick from = 0;
    std::optional<Tick> until;  // open-ended when absent
    bool operator==(const SlowdownFault&) const = default;
};

struct RejoinFault {
    WorkerId worker;
    Tick at = 0;
    bool operator==(const RejoinFault&) const = default;
};

using FaultSpec = std::variant<CrashFault, SlowdownFault, RejoinFault>;

// --- models -------------------------------------------------------------

struct ComputeModel {
    Tick base_ticks = 10;
    Tick jitter_ticks = 0;  // uniform extra in [0, jitter_ticks]
    // Per-worker duration factor; workers not listed use 1.0.
    std::map<std::uint32_t, double> multipliers;

    double multiplier_for(WorkerId j) const {
        auto it = multipliers.find(j.value);
        return it == multipliers.end() ? 1.0 : it->second;
    }
};

enum class Channel {
    FarmerToDispatcher,
    DispatcherToFarmer,
    DispatcherToWorker,
    WorkerToDispatcher,
    WorkerToCollector,
    CollectorToDispatcher,
    DispatcherToCollector,
};

struct LatencyModel {
    Tick default_ticks = 1;
    std::map<Channel, Tick> overrides;

    Tick hop(Channel c) const {
        auto it = overrides.find(c);
        return it == overrides.end() ? default_ticks : it->second;
    }
};

enum class AlarmPolicy { Log, Halt };

// --- scenario -----------------------------------------------------------

// Default input seed: scenario seeds scope dispatch tie-breaks and jitter
// only, so runs differing solely in seed process the same images.
inline constexpr std::uint64_t kDefaultCameraSeed = 0x7461736b6661726dULL;

struct Scenario {
    std::string name = "scenario";
    std::uint32_t blocks = 1;   // m
    std::uint32_t workers = 1;  // n
    std::uint32_t images = 1;
    std::size_t image_size = 16;
    std::uint32_t threshold = 3;
    std::uint64_t seed = 0;
    std::uint64_t camera_seed = kDefaultCameraSeed;
    std::string worker_fn = "identity";
    AlarmPolicy alarm_policy = AlarmPolicy::Log;
    ComputeModel compute;
    LatencyModel latency;
    std::vector<FaultSpec> faults;
    std::optional<Tick> stop_at;  // external mid-run stop

    // Semantic checks; throws InvalidScenario naming the offending field.
    void validate() const;
};

// Parses and validates a scenario from JSON text / a file path.
// Throws InvalidScenario with a field or parse diagnostic.
Scenario load_scenario(const std::string& json_text, const std::string& name_hint);
Scenario load_scenario_file(const std::string& path);

// Serializes back to JSON (round-trips through load_scenario).
std::string scenario_to_json(const Scenario& sc);

}  // namespace taskfarm
