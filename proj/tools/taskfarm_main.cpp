// Command-line front end: run simulation scenarios, replay traces, and emit
// reliability curves. Exit codes are a stable contract: 0 success, 1 input
// error, 2 deadlock (or alarm halt), 3 trace divergence.

#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <CLI11.hpp>

#include "taskfarm/log.hpp"
#include "taskfarm/reliability.hpp"
#include "taskfarm/scenario.hpp"
#include "taskfarm/simnet.hpp"
#include "taskfarm/trace.hpp"

namespace fs = std::filesystem;
using namespace taskfarm;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInputError = 1;
constexpr int kExitDeadlock = 2;
constexpr int kExitDivergence = 3;

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error("cannot write " + path.string());
    }
    out << text;
}

void write_run_outputs(const SimResult& result, const fs::path& dir,
                       const std::string& trace_format) {
    fs::create_directories(dir);
    if (trace_format == "text") {
        write_file(dir / "trace.txt", result.trace.to_text());
    } else {
        result.trace.write_binary_file((dir / "trace.bin").string());
    }
    for (const FinalArtifact& artifact : result.artifacts) {
        std::ofstream out(dir / ("run-" + std::to_string(artifact.run) + ".out"),
                          std::ios::binary | std::ios::trunc);
        out.write(reinterpret_cast<const char*>(artifact.bytes.data()),
                  static_cast<std::streamsize>(artifact.bytes.size()));
    }
}

int cmd_simulate(const std::string& scenario_path, const std::string& out_dir,
                 const std::string& trace_format, std::uint32_t repeat,
                 std::uint64_t seed_stride, int jobs) {
    Scenario base;
    try {
        base = load_scenario_file(scenario_path);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInputError;
    }

    std::vector<Scenario> scenarios;
    for (std::uint32_t rep = 0; rep < repeat; ++rep) {
        Scenario sc = base;
        if (repeat > 1) {
            sc.seed = base.seed + rep * seed_stride;
            sc.name = base.name + "#" + std::to_string(rep);
        }
        scenarios.push_back(std::move(sc));
    }

    std::vector<SimResult> results(scenarios.size());
    std::vector<std::exception_ptr> errors(scenarios.size());
#ifdef _OPENMP
    if (jobs > 1) {
        omp_set_num_threads(jobs);
    }
#pragma omp parallel for schedule(dynamic) if (jobs > 1)
#endif
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(scenarios.size());
         ++i) {
        try {
            results[i] = run_scenario(scenarios[i]);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    }
    for (const auto& err : errors) {
        if (err) {
            std::rethrow_exception(err);
        }
    }

    fs::path out(out_dir);
    fs::create_directories(out);
    std::string metrics_csv = std::string(Metrics::kCsvHeader) + "\n";
    std::string summary_csv = std::string(Metrics::kSummaryHeader) + "\n";
    bool trouble = false;
    for (std::size_t i = 0; i < results.size(); ++i) {
        const SimResult& result = results[i];
        fs::path dir = repeat > 1 ? out / ("rep-" + std::to_string(i)) : out;
        write_run_outputs(result, dir, trace_format);
        metrics_csv += result.metrics.to_csv(false);
        summary_csv += result.metrics.summary_csv(false);
        if (result.status != SimStatus::Completed) {
            trouble = true;
            std::cerr << scenarios[i].name
                       << (result.status == SimStatus::Deadlock
                               ? ": deadlock detected: "
                               : ": halted: ")
                       << result.diagnostic << "\n";
        }
    }
    write_file(out / "metrics.csv", metrics_csv);
    write_file(out / "summary.csv", summary_csv);

    if (trouble) {
        return kExitDeadlock;
    }
    std::cout << "simulated " << results.size() << " scenario"
              << (results.size() == 1 ? "" : "s") << " -> " << out.string()
              << "\n";
    return kExitOk;
}

int cmd_replay(const std::string& trace_path, const std::string& scenario_path) {
    EventTrace stored;
    Scenario sc;
    try {
        stored = EventTrace::read_binary_file(trace_path);
        sc = load_scenario_file(scenario_path);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInputError;
    }
    ReplayVerdict verdict = replay(stored, sc);
    if (std::holds_alternative<ReplayEqual>(verdict)) {
        std::cout << "replay equal (" << stored.records.size() << " records)\n";
        return kExitOk;
    }
    const auto& div = std::get<FirstDivergence>(verdict);
    std::cerr << "replay diverged at record " << div.index << ": " << div.detail
              << "\n";
    return kExitDivergence;
}

int cmd_reliability(const std::vector<std::uint32_t>& n_values,
                    std::uint32_t samples, const std::string& out_path) {
    std::string csv;
    try {
        csv = reliability::emit_curves(n_values, samples);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInputError;
    }
    write_file(out_path, csv);
    std::cout << "wrote " << n_values.size() * samples << " data rows to "
              << out_path << "\n";
    return kExitOk;
}

int cmd_validate(const std::string& scenario_path) {
    try {
        Scenario sc = load_scenario_file(scenario_path);
        std::cout << "ok: " << sc.name << " (blocks=" << sc.blocks
                  << " workers=" << sc.workers << " images=" << sc.images
                  << " faults=" << sc.faults.size() << ")\n";
        return kExitOk;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInputError;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fault-tolerant farmer-worker protocol simulator"};
    app.require_subcommand(1);

    std::string scenario_path;
    std::string out_dir = "out";
    std::string trace_format = "bin";
    std::uint32_t repeat = 1;
    std::uint64_t seed_stride = 1;
    int jobs = 1;
    auto* simulate = app.add_subcommand("simulate", "Run a scenario file");
    simulate->add_option("scenario", scenario_path, "Scenario JSON file")
        ->required();
    simulate->add_option("--out", out_dir, "Output directory");
    simulate->add_option("--trace-format", trace_format, "Trace dump format")
        ->check(CLI::IsMember({"bin", "text"}));
    simulate->add_option("--repeat", repeat, "Run N seed-varied repetitions")
        ->check(CLI::PositiveNumber);
    simulate->add_option("--seed-stride", seed_stride,
                         "Seed increment between repetitions");
    simulate->add_option("--jobs", jobs, "Run repetitions in parallel")
        ->check(CLI::PositiveNumber);

    std::string trace_path;
    auto* replay_cmd = app.add_subcommand("replay",
                                          "Re-execute and compare a trace");
    replay_cmd->add_option("trace", trace_path, "Binary trace file")->required();
    replay_cmd->add_option("scenario", scenario_path, "Scenario JSON file")
        ->required();

    std::vector<std::uint32_t> n_values{1, 2, 4, 8, 16};
    std::uint32_t samples = 101;
    std::string curve_path = "reliability.csv";
    auto* rel = app.add_subcommand("reliability",
                                   "Emit series/parallel reliability curves");
    rel->add_option("--n", n_values, "Farm sizes")->delimiter(',');
    rel->add_option("--samples", samples, "Grid points in [0,1]");
    rel->add_option("--out", curve_path, "Output CSV path");

    auto* validate = app.add_subcommand("validate", "Check a scenario file");
    validate->add_option("scenario", scenario_path, "Scenario JSON file")
        ->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (simulate->parsed()) {
            return cmd_simulate(scenario_path, out_dir, trace_format, repeat,
                                seed_stride, jobs);
        }
        if (replay_cmd->parsed()) {
            return cmd_replay(trace_path, scenario_path);
        }
        if (rel->parsed()) {
            return cmd_reliability(n_values, samples, curve_path);
        }
        if (validate->parsed()) {
            return cmd_validate(scenario_path);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInputError;
    }
    return kExitInputError;
}
