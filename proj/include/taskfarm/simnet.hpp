#pragma once

// Deterministic discrete-event transport and fault injector wiring the four
// actors together under virtual time. The event loop is single-threaded;
// run_scenario is a pure function of the scenario (including its seed), so
// independent scenarios may run concurrently.

#include <cstdint>
#include <string>
#include <vector>

#include "taskfarm/actors.hpp"
#include "taskfarm/scenario.hpp"
#include "taskfarm/trace.hpp"

namespace taskfarm {

struct RunMetrics {
    std::uint32_t run = 0;  // 1-based
    Tick makespan_ticks = 0;
    std::uint32_t redundant_assignments = 0;
    std::uint32_t alarms = 0;
    std::uint32_t duplicates = 0;
    std::uint32_t mismatches = 0;
    bool operator==(const RunMetrics&) const = default;
};

struct Metrics {
    std::string scenario;
    std::vector<RunMetrics> runs;  // completed runs only
    std::uint32_t runs_completed = 0;
    std::uint32_t duplicate_outputs = 0;
    std::uint32_t mismatches = 0;
    std::uint32_t partials_on_stop = 0;
    std::uint32_t cross_run_stragglers = 0;
    std::uint32_t alarms = 0;
    std::uint32_t redundant_assignments = 0;
    std::vector<double> worker_utilization;  // busy ticks / trace span

    bool operator==(const Metrics&) const = default;

    static constexpr const char* kCsvHeader =
        "scenario,run,makespan_ticks,redundant_assignments,alarms,duplicates,"
        "mismatches";
    static constexpr const char* kSummaryHeader =
        "scenario,runs_completed,duplicate_outputs,mismatches,partials_on_stop,"
        "cross_run_stragglers,alarms,worker_utilization";

    // One row per completed run, spec header.
    std::string to_csv(bool with_header = true) const;
    // One scenario-level row.
    std::string summary_csv(bool with_header = true) const;
};

enum class SimStatus {
    Completed,    // quiescent with every actor terminated
    Deadlock,     // no events pending but actors still waiting
    AlarmHalted,  // alarm fired under the halt policy
};

struct SimResult {
    SimStatus status = SimStatus::Completed;
    std::string diagnostic;
    EventTrace trace;
    Metrics metrics;
    std::vector<FinalArtifact> artifacts;
};

// Executes the scenario to quiescence and returns the full trace, metrics
// and every completed artifact. Deterministic: identical scenarios yield
// byte-identical traces.
SimResult run_scenario(const Scenario& sc);

// Re-executes the scenario and compares against the stored trace.
ReplayVerdict replay(const EventTrace& trace, const Scenario& sc);

// Derives all metrics from a trace by replaying delivery order against
// collector / worker models. run_scenario uses this same path, so stored
// traces and live runs can never disagree.
Metrics metrics_from_trace(const EventTrace& trace, const Scenario& sc);

}  // namespace taskfarm
