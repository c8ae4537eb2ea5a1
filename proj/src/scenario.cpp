#include "taskfarm/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace taskfarm {

namespace {

using nlohmann::json;

const std::map<std::string, Channel>& channel_names() {
    static const std::map<std::string, Channel> names = {
        {"farmer_to_dispatcher", Channel::FarmerToDispatcher},
        {"dispatcher_to_farmer", Channel::DispatcherToFarmer},
        {"dispatcher_to_worker", Channel::DispatcherToWorker},
        {"worker_to_dispatcher", Channel::WorkerToDispatcher},
        {"worker_to_collector", Channel::WorkerToCollector},
        {"collector_to_dispatcher", Channel::CollectorToDispatcher},
        {"dispatcher_to_collector", Channel::DispatcherToCollector},
    };
    return names;
}

[[noreturn]] void fail(const std::string& field, const std::string& why) {
    throw InvalidScenario("scenario field '" + field + "': " + why);
}

template <typename T>
T get_number(const json& j, const std::string& field, T fallback,
             bool required = false) {
    if (!j.contains(field)) {
        if (required) {
            fail(field, "missing");
        }
        return fallback;
    }
    if (!j.at(field).is_number()) {
        fail(field, "must be a number");
    }
    return j.at(field).get<T>();
}

FaultSpec parse_fault(const json& j, std::size_t index) {
    const std::string where = "faults[" + std::to_string(index) + "]";
    if (!j.is_object() || !j.contains("kind") || !j.at("kind").is_string()) {
        fail(where, "must be an object with a string 'kind'");
    }
    std::string kind = j.at("kind").get<std::string>();
    auto worker = WorkerId{get_number<std::uint32_t>(j, "worker", 0, true)};
    if (kind == "crash") {
        return CrashFault{worker, get_number<Tick>(j, "at", 0, true)};
    }
    if (kind == "rejoin") {
        return RejoinFault{worker, get_number<Tick>(j, "at", 0, true)};
    }
    if (kind == "slowdown") {
        SlowdownFault f;
        f.worker = worker;
        f.factor = get_number<double>(j, "factor", 1.0, true);
        f.from = get_number<Tick>(j, "from", 0, true);
        if (j.contains("until")) {
            f.until = get_number<Tick>(j, "until", 0, true);
        }
        return f;
    }
    fail(where + ".kind", "unknown kind '" + kind + "'");
}

}  // namespace

void Scenario::validate() const {
    if (blocks == 0) fail("blocks", "must be >= 1");
    if (workers == 0) fail("workers", "must be >= 1");
    if (image_size == 0) fail("image_size", "must be >= 1");
    if (image_size % blocks != 0) {
        fail("image_size", "must be divisible by 'blocks' (" +
                               std::to_string(image_size) + " % " +
                               std::to_string(blocks) + " != 0)");
    }
    if (compute.base_ticks == 0) fail("compute.base_ticks", "must be >= 1");
    for (const auto& [worker, factor] : compute.multipliers) {
        if (worker == 0 || worker > workers) {
            fail("compute.multipliers", "worker " + std::to_string(worker) +
                                            " outside 1.." +
                                            std::to_string(workers));
        }
        if (factor <= 0.0) {
            fail("compute.multipliers", "factor must be positive");
        }
    }
    if (worker_fn != "identity" && worker_fn != "invert" &&
        worker_fn != "worker_tagged") {
        fail("worker_fn", "unknown function '" + worker_fn + "'");
    }

    // Per-worker fault schedules: ids in range, rejoin only after a crash,
    // at most one outstanding crash, non-overlapping slowdown windows.
    std::map<std::uint32_t, std::vector<std::pair<Tick, bool>>> life;  // (t, crash?)
    std::map<std::uint32_t, std::vector<std::pair<Tick, Tick>>> slow_windows;
    for (std::size_t i = 0; i < faults.size(); ++i) {
        const std::string where = "faults[" + std::to_string(i) + "]";
        std::visit(
            [&](const auto& f) {
                if (f.worker.value == 0 || f.worker.value > workers) {
                    fail(where + ".worker",
                         "worker " + std::to_string(f.worker.value) +
                             " outside 1.." + std::to_string(workers));
                }
            },
            faults[i]);
        if (const auto* crash = std::get_if<CrashFault>(&faults[i])) {
            life[crash->worker.value].push_back({crash->at, true});
        } else if (const auto* rejoin = std::get_if<RejoinFault>(&faults[i])) {
            life[rejoin->worker.value].push_back({rejoin->at, false});
        } else {
            const auto& slow = std::get<SlowdownFault>(faults[i]);
            if (slow.factor < 1.0) {
                fail(where + ".factor", "must be >= 1");
            }
            if (slow.until && *slow.until <= slow.from) {
                fail(where + ".until", "must be > 'from'");
            }
            Tick end = slow.until.value_or(~Tick{0});
            slow_windows[slow.worker.value].push_back({slow.from, end});
        }
    }
    for (auto& [worker, events] : life) {
        std::stable_sort(events.begin(), events.end(),
                         [](const auto& a, const auto& b) { return a.first < b.first; });
        bool crashed = false;
        Tick last = 0;
        for (const auto& [t, is_crash] : events) {
            if (is_crash) {
                if (crashed) {
                    fail("faults", "worker " + std::to_string(worker) +
                                       " crashes twice without rejoin");
                }
                crashed = true;
            } else {
                if (!crashed || t <= last) {
                    fail("faults", "worker " + std::to_string(worker) +
                                       " rejoin at " + std::to_string(t) +
                                       " without an earlier crash");
                }
                crashed = false;
            }
            last = t;
        }
    }
    for (auto& [worker, windows] : slow_windows) {
        std::sort(windows.begin(), windows.end());
        for (std::size_t i = 1; i < windows.size(); ++i) {
            if (windows[i].first < windows[i - 1].second) {
                fail("faults", "worker " + std::to_string(worker) +
                                   " has overlapping slowdown windows");
            }
        }
    }
}

Scenario load_scenario(const std::string& json_text,
                       const std::string& name_hint) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw InvalidScenario(std::string("scenario parse error: ") + e.what());
    }
    if (!j.is_object()) {
        throw InvalidScenario("scenario must be a JSON object");
    }

    Scenario sc;
    sc.name = j.value("name", name_hint);
    sc.blocks = get_number<std::uint32_t>(j, "blocks", 0, true);
    sc.workers = get_number<std::uint32_t>(j, "workers", 0, true);
    sc.images = get_number<std::uint32_t>(j, "images", 1);
    sc.image_size = get_number<std::size_t>(j, "image_size", 0, true);
    sc.threshold = get_number<std::uint32_t>(j, "threshold", 3);
    sc.seed = get_number<std::uint64_t>(j, "seed", 0);
    sc.camera_seed =
        get_number<std::uint64_t>(j, "camera_seed", kDefaultCameraSeed);
    sc.worker_fn = j.value("worker_fn", std::string("identity"));
    if (j.contains("stop_at")) {
        sc.stop_at = get_number<Tick>(j, "stop_at", 0);
    }

    std::string policy = j.value("alarm_policy", std::string("log"));
    if (policy == "log") {
        sc.alarm_policy = AlarmPolicy::Log;
    } else if (policy == "halt") {
        sc.alarm_policy = AlarmPolicy::Halt;
    } else {
        fail("alarm_policy", "must be 'log' or 'halt'");
    }

    if (j.contains("compute")) {
        const json& c = j.at("compute");
        if (!c.is_object()) fail("compute", "must be an object");
        sc.compute.base_ticks = get_number<Tick>(c, "base_ticks", 10);
        sc.compute.jitter_ticks = get_number<Tick>(c, "jitter_ticks", 0);
        if (c.contains("multipliers")) {
            if (!c.at("multipliers").is_object()) {
                fail("compute.multipliers", "must map worker id to factor");
            }
            for (const auto& [key, value] : c.at("multipliers").items()) {
                std::uint32_t worker = 0;
                try {
                    worker = static_cast<std::uint32_t>(std::stoul(key));
                } catch (...) {
                    fail("compute.multipliers", "key '" + key +
                                                    "' is not a worker id");
                }
                if (!value.is_number()) {
                    fail("compute.multipliers", "factor must be a number");
                }
                sc.compute.multipliers[worker] = value.get<double>();
            }
        }
    }

    if (j.contains("latency")) {
        const json& l = j.at("latency");
        if (!l.is_object()) fail("latency", "must be an object");
        sc.latency.default_ticks = get_number<Tick>(l, "default", 1);
        for (const auto& [key, value] : l.items()) {
            if (key == "default") continue;
            auto it = channel_names().find(key);
            if (it == channel_names().end()) {
                fail("latency", "unknown channel '" + key + "'");
            }
            if (!value.is_number()) {
                fail("latency." + key, "must be a number");
            }
            sc.latency.overrides[it->second] = value.get<Tick>();
        }
    }

    if (j.contains("faults")) {
        if (!j.at("faults").is_array()) fail("faults", "must be an array");
        std::size_t i = 0;
        for (const json& f : j.at("faults")) {
            sc.faults.push_back(parse_fault(f, i++));
        }
    }

    sc.validate();
    return sc;
}

Scenario load_scenario_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InvalidScenario("cannot open scenario file: " + path);
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    std::string stem = path;
    if (auto slash = stem.find_last_of('/'); slash != std::string::npos) {
        stem = stem.substr(slash + 1);
    }
    if (auto dot = stem.find_last_of('.'); dot != std::string::npos) {
        stem = stem.substr(0, dot);
    }
    return load_scenario(buffer.str(), stem);
}

std::string scenario_to_json(const Scenario& sc) {
    json j;
    j["name"] = sc.name;
    j["blocks"] = sc.blocks;
    j["workers"] = sc.workers;
    j["images"] = sc.images;
    j["image_size"] = sc.image_size;
    j["threshold"] = sc.threshold;
    j["seed"] = sc.seed;
    j["camera_seed"] = sc.camera_seed;
    j["worker_fn"] = sc.worker_fn;
    j["alarm_policy"] = sc.alarm_policy == AlarmPolicy::Halt ? "halt" : "log";
    j["compute"] = {{"base_ticks", sc.compute.base_ticks},
                    {"jitter_ticks", sc.compute.jitter_ticks}};
    if (!sc.compute.multipliers.empty()) {
        json mults = json::object();
        for (const auto& [worker, factor] : sc.compute.multipliers) {
            mults[std::to_string(worker)] = factor;
        }
        j["compute"]["multipliers"] = mults;
    }
    j["latency"] = {{"default", sc.latency.default_ticks}};
    for (const auto& [channel, ticks] : sc.latency.overrides) {
        for (const auto& [name, c] : channel_names()) {
            if (c == channel) {
                j["latency"][name] = ticks;
            }
        }
    }
    if (sc.stop_at) {
        j["stop_at"] = *sc.stop_at;
    }
    json faults = json::array();
    for (const FaultSpec& f : sc.faults) {
        json fj;
        if (const auto* crash = std::get_if<CrashFault>(&f)) {
            fj = {{"kind", "crash"},
                  {"worker", crash->worker.value},
                  {"at", crash->at}};
        } else if (const auto* rejoin = std::get_if<RejoinFault>(&f)) {
            fj = {{"kind", "rejoin"},
                  {"worker", rejoin->worker.value},
                  {"at", rejoin->at}};
        } else {
            const auto& slow = std::get<SlowdownFault>(f);
            fj = {{"kind", "slowdown"},
                  {"worker", slow.worker.value},
                  {"factor", slow.factor},
                  {"from", slow.from}};
            if (slow.until) {
                fj["until"] = *slow.until;
            }
        }
        faults.push_back(fj);
    }
    if (!faults.empty()) {
        j["faults"] = faults;
    }
    return j.dump(2);
}

}  // namespace taskfarm
