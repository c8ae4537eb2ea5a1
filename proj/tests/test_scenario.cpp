#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "taskfarm/scenario.hpp"

using namespace taskfarm;

namespace {

Scenario parse(const std::string& text) { return load_scenario(text, "t"); }

}  // namespace

TEST_CASE("a minimal scenario parses with defaults") {
    Scenario sc = parse(R"({"blocks": 4, "workers": 2, "image_size": 16})");
    CHECK(sc.name == "t");
    CHECK(sc.images == 1);
    CHECK(sc.threshold == 3);
    CHECK(sc.seed == 0);
    CHECK(sc.camera_seed == kDefaultCameraSeed);
    CHECK(sc.worker_fn == "identity");
    CHECK(sc.alarm_policy == AlarmPolicy::Log);
    CHECK(sc.compute.base_ticks == 10);
    CHECK(sc.latency.default_ticks == 1);
    CHECK(!sc.stop_at);
}

TEST_CASE("full scenarios survive a serialization round trip") {
    Scenario sc;
    sc.name = "round";
    sc.blocks = 6;
    sc.workers = 3;
    sc.images = 2;
    sc.image_size = 18;
    sc.threshold = 7;
    sc.seed = 99;
    sc.camera_seed = 1234;
    sc.worker_fn = "invert";
    sc.alarm_policy = AlarmPolicy::Halt;
    sc.compute.base_ticks = 5;
    sc.compute.jitter_ticks = 2;
    sc.compute.multipliers[2] = 1.5;
    sc.latency.default_ticks = 2;
    sc.latency.overrides[Channel::WorkerToCollector] = 3;
    sc.stop_at = 500;
    sc.faults.push_back(CrashFault{WorkerId{1}, 10});
    sc.faults.push_back(RejoinFault{WorkerId{1}, 50});
    SlowdownFault slow;
    slow.worker = WorkerId{2};
    slow.factor = 4.0;
    slow.from = 5;
    slow.until = 80;
    sc.faults.push_back(slow);

    Scenario back = load_scenario(scenario_to_json(sc), "round");
    CHECK(back.blocks == sc.blocks);
    CHECK(back.workers == sc.workers);
    CHECK(back.images == sc.images);
    CHECK(back.image_size == sc.image_size);
    CHECK(back.threshold == sc.threshold);
    CHECK(back.seed == sc.seed);
    CHECK(back.camera_seed == sc.camera_seed);
    CHECK(back.worker_fn == sc.worker_fn);
    CHECK(back.alarm_policy == sc.alarm_policy);
    CHECK(back.compute.base_ticks == sc.compute.base_ticks);
    CHECK(back.compute.jitter_ticks == sc.compute.jitter_ticks);
    CHECK(back.compute.multipliers == sc.compute.multipliers);
    CHECK(back.latency.default_ticks == sc.latency.default_ticks);
    CHECK(back.latency.overrides == sc.latency.overrides);
    CHECK(back.stop_at == sc.stop_at);
    CHECK(back.faults == sc.faults);
}

TEST_CASE("structural failures name the field") {
    CHECK_THROWS_WITH_AS(parse("{ nope"),
                         doctest::Contains("parse error"), InvalidScenario);
    CHECK_THROWS_WITH_AS(parse("[1,2]"),
                         doctest::Contains("JSON object"), InvalidScenario);
    CHECK_THROWS_WITH_AS(parse(R"({"workers": 2, "image_size": 4})"),
                         doctest::Contains("blocks"), InvalidScenario);
    CHECK_THROWS_WITH_AS(
        parse(R"({"blocks": "four", "workers": 2, "image_size": 4})"),
        doctest::Contains("number"), InvalidScenario);
}

TEST_CASE("semantic validation rejects bad geometry") {
    CHECK_THROWS_WITH_AS(
        parse(R"({"blocks": 0, "workers": 2, "image_size": 4})"),
        doctest::Contains("blocks"), InvalidScenario);
    CHECK_THROWS_WITH_AS(
        parse(R"({"blocks": 3, "workers": 0, "image_size": 3})"),
        doctest::Contains("workers"), InvalidScenario);
    CHECK_THROWS_WITH_AS(
        parse(R"({"blocks": 3, "workers": 1, "image_size": 10})"),
        doctest::Contains("divisible"), InvalidScenario);
}

TEST_CASE("fault schedules are validated per worker") {
    const char* worker_out_of_range = R"({
        "blocks": 2, "workers": 4, "image_size": 4,
        "faults": [{"kind": "crash", "worker": 9, "at": 1}]})";
    CHECK_THROWS_WITH_AS(parse(worker_out_of_range),
                         doctest::Contains("outside 1..4"), InvalidScenario);

    const char* rejoin_without_crash = R"({
        "blocks": 2, "workers": 2, "image_size": 4,
        "faults": [{"kind": "rejoin", "worker": 1, "at": 5}]})";
    CHECK_THROWS_WITH_AS(parse(rejoin_without_crash),
                         doctest::Contains("without an earlier crash"),
                         InvalidScenario);

    const char* rejoin_before_crash = R"({
        "blocks": 2, "workers": 2, "image_size": 4,
        "faults": [{"kind": "crash", "worker": 1, "at": 5},
                   {"kind": "rejoin", "worker": 1, "at": 5}]})";
    CHECK_THROWS_AS(parse(rejoin_before_crash), InvalidScenario);

    const char* double_crash = R"({
        "blocks": 2, "workers": 2, "image_size": 4,
        "faults": [{"kind": "crash", "worker": 1, "at": 5},
                   {"kind": "crash", "worker": 1, "at": 9}]})";
    CHECK_THROWS_WITH_AS(parse(double_crash), doctest::Contains("twice"),
                         InvalidScenario);

    const char* crash_rejoin_crash = R"({
        "blocks": 2, "workers": 2, "image_size": 4,
        "faults": [{"kind": "crash", "worker": 1, "at": 5},
                   {"kind": "rejoin", "worker": 1, "at": 9},
                   {"kind": "crash", "worker": 1, "at": 20}]})";
    CHECK_NOTHROW(parse(crash_rejoin_crash));
}

TEST_CASE("slowdowns require sane factors and windows") {
    const char* weak_factor = R"({
        "blocks": 2, "workers": 2, "image_size": 4,
        "faults": [{"kind": "slowdown", "worker": 1, "factor": 0.5, "from": 0}]})";
    CHECK_THROWS_WITH_AS(parse(weak_factor), doctest::Contains(">= 1"),
                         InvalidScenario);

    const char* empty_window = R"({
        "blocks": 2, "workers": 2, "image_size": 4,
        "faults": [{"kind": "slowdown", "worker": 1, "factor": 2,
                    "from": 10, "until": 10}]})";
    CHECK_THROWS_AS(parse(empty_window), InvalidScenario);

    const char* overlapping = R"({
        "blocks": 2, "workers": 2, "image_size": 4,
        "faults": [
          {"kind": "slowdown", "worker": 1, "factor": 2, "from": 0, "until": 50},
          {"kind": "slowdown", "worker": 1, "factor": 3, "from": 20, "until": 60}]})";
    CHECK_THROWS_WITH_AS(parse(overlapping), doctest::Contains("overlapping"),
                         InvalidScenario);

    const char* disjoint = R"({
        "blocks": 2, "workers": 2, "image_size": 4,
        "faults": [
          {"kind": "slowdown", "worker": 1, "factor": 2, "from": 0, "until": 20},
          {"kind": "slowdown", "worker": 1, "factor": 3, "from": 20, "until": 60}]})";
    CHECK_NOTHROW(parse(disjoint));
}

TEST_CASE("unknown enumerations are rejected") {
    CHECK_THROWS_WITH_AS(
        parse(R"({"blocks": 2, "workers": 1, "image_size": 4,
                  "worker_fn": "frobnicate"})"),
        doctest::Contains("worker_fn"), InvalidScenario);
    CHECK_THROWS_WITH_AS(
        parse(R"({"blocks": 2, "workers": 1, "image_size": 4,
                  "alarm_policy": "shrug"})"),
        doctest::Contains("alarm_policy"), InvalidScenario);
    CHECK_THROWS_WITH_AS(
        parse(R"({"blocks": 2, "workers": 1, "image_size": 4,
                  "latency": {"sideways": 2}})"),
        doctest::Contains("unknown channel"), InvalidScenario);
    CHECK_THROWS_WITH_AS(
        parse(R"({"blocks": 2, "workers": 1, "image_size": 4,
                  "faults": [{"kind": "meteor", "worker": 1, "at": 1}]})"),
        doctest::Contains("unknown kind"), InvalidScenario);
}

TEST_CASE("multiplier keys must be worker ids in range") {
    CHECK_THROWS_WITH_AS(
        parse(R"({"blocks": 2, "workers": 2, "image_size": 4,
                  "compute": {"multipliers": {"3": 1.5}}})"),
        doctest::Contains("outside 1..2"), InvalidScenario);
    CHECK_THROWS_WITH_AS(
        parse(R"({"blocks": 2, "workers": 2, "image_size": 4,
                  "compute": {"multipliers": {"x": 1.5}}})"),
        doctest::Contains("not a worker id"), InvalidScenario);
}
