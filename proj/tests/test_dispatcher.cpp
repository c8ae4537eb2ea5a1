#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <map>

#include "taskfarm/dispatcher.hpp"

using namespace taskfarm;

namespace {

Block block_of(std::initializer_list<std::uint8_t> bytes) {
    return Block{Bytes(bytes)};
}

// Counts how many sends target the given endpoint.
std::size_t count_to(const std::vector<Send>& sends, Endpoint to) {
    return static_cast<std::size_t>(
        std::count_if(sends.begin(), sends.end(),
                      [&](const Send& s) { return s.to == to; }));
}

}  // namespace

TEST_CASE("block couple stores the buffer and disables the slot") {
    Dispatcher d(2, 1, 3, 1);
    d.on_new_run();
    CHECK(d.freshness()[1] == Freshness::count(0));
    d.on_block_couple(BlockId{2}, block_of({1, 2}));
    CHECK(d.freshness()[0] == Freshness::count(0));
    CHECK(d.freshness()[1] == Freshness::disabled());

    // Repeated couple overwrites the buffer, slot stays disabled.
    d.on_block_couple(BlockId{2}, block_of({9, 9}));
    CHECK(d.freshness()[1] == Freshness::disabled());

    CHECK_THROWS_AS(d.on_block_couple(BlockId{3}, block_of({})),
                    OutOfRangeBlock);
}

TEST_CASE("new run zeroes the vector and resumes the whole farm") {
    Dispatcher d(3, 4, 3, 1);
    auto sends = d.on_new_run();
    CHECK(sends.size() == 4);
    for (std::uint32_t j = 1; j <= 4; ++j) {
        CHECK(count_to(sends, Endpoint::worker(WorkerId{j})) == 1);
    }
    for (const Freshness& f : d.freshness()) {
        CHECK(f == Freshness::count(0));
    }

    // Idempotent on an already-zero vector; still broadcasts.
    CHECK(d.on_new_run().size() == 4);

    // Sleepers are cleared and among the resume recipients.
    Dispatcher d2(1, 5, 3, 1);
    d2.select_block(WorkerId{2});
    d2.select_block(WorkerId{5});
    CHECK(d2.sleepers().size() == 2);
    auto resumes = d2.on_new_run();
    CHECK(d2.sleepers().empty());
    CHECK(count_to(resumes, Endpoint::worker(WorkerId{2})) == 1);
    CHECK(count_to(resumes, Endpoint::worker(WorkerId{5})) == 1);
}

TEST_CASE("selection serves the unique minimum") {
    // Reach s = [Count 1, Count 0, Disabled]: zero everything, disable 3,
    // then let one pick bump whichever block the tie-break chose.
    Dispatcher d(3, 2, 3, 1);
    d.on_new_run();                                 // [0,0,0]
    d.on_block_couple(BlockId{3}, block_of({1}));   // [0,0,D]
    auto first = d.select_block(WorkerId{1});
    REQUIRE(std::holds_alternative<WorkAssignment>(first));
    BlockId bumped = std::get<WorkAssignment>(first).block;
    BlockId fresh{bumped == BlockId{1} ? 2u : 1u};

    // The untouched block is the unique minimum now.
    auto second = d.select_block(WorkerId{2});
    REQUIRE(std::holds_alternative<WorkAssignment>(second));
    CHECK(std::get<WorkAssignment>(second).block == fresh);
    CHECK(d.freshness()[bumped.value - 1] == Freshness::count(1));
    CHECK(d.freshness()[fresh.value - 1] == Freshness::count(1));
    CHECK(d.freshness()[2] == Freshness::disabled());
}

TEST_CASE("selection returns sleep only when everything is disabled") {
    Dispatcher d(2, 2, 3, 1);
    CHECK(std::holds_alternative<SleepAssignment>(d.select_block(WorkerId{1})));
    CHECK(d.sleepers().count(WorkerId{1}) == 1);

    d.on_new_run();
    CHECK(std::holds_alternative<WorkAssignment>(d.select_block(WorkerId{1})));
}

TEST_CASE("work carries the stored buffer") {
    Dispatcher d(1, 1, 3, 1);
    d.on_block_couple(BlockId{1}, block_of({0xAB, 0xCD}));
    d.on_new_run();
    auto a = d.select_block(WorkerId{1});
    REQUIRE(std::holds_alternative<WorkAssignment>(a));
    CHECK(std::get<WorkAssignment>(a).data == block_of({0xAB, 0xCD}));
}

TEST_CASE("tie-break is uniform over the minimum class") {
    std::map<std::uint32_t, int> picks;
    for (std::uint64_t seed = 1; seed <= 10000; ++seed) {
        Dispatcher d(2, 1, 3, seed);
        d.on_new_run();  // both blocks at count 0
        auto a = d.select_block(WorkerId{1});
        REQUIRE(std::holds_alternative<WorkAssignment>(a));
        BlockId picked = std::get<WorkAssignment>(a).block;
        ++picks[picked.value];
        // The chosen entry advanced, the other stayed brand-new.
        CHECK(d.freshness()[picked.value - 1] == Freshness::count(1));
        CHECK(d.freshness()[2 - picked.value] == Freshness::count(0));
    }
    CHECK(picks[1] >= 4500);
    CHECK(picks[2] >= 4500);
}

TEST_CASE("threshold alarm fires strictly above the threshold") {
    Dispatcher d(1, 4, 3, 1);
    d.on_new_run();
    for (int pick = 1; pick <= 3; ++pick) {
        d.select_block(WorkerId{static_cast<std::uint32_t>(pick)});
        CHECK(!d.check_threshold(BlockId{1}));  // counts 1..3, T=3
    }
    d.select_block(WorkerId{4});  // count 4 > 3
    auto alarm = d.check_threshold(BlockId{1});
    REQUIRE(alarm.has_value());
    CHECK(alarm->block == BlockId{1});
    CHECK(alarm->count == 4);
}

TEST_CASE("threshold zero alarms as soon as a count exceeds zero") {
    Dispatcher d(1, 2, 0, 1);
    d.on_new_run();
    d.select_block(WorkerId{1});
    auto alarm = d.check_threshold(BlockId{1});
    REQUIRE(alarm.has_value());
    CHECK(alarm->count == 1);
    d.select_block(WorkerId{2});
    CHECK(d.check_threshold(BlockId{1})->count == 2);
}

TEST_CASE("slot ack disables, acks the farmer and forces resumes") {
    Dispatcher d(4, 8, 3, 1);
    d.on_new_run();
    d.on_block_couple(BlockId{2}, block_of({}));
    d.on_block_couple(BlockId{3}, block_of({}));
    d.on_block_couple(BlockId{4}, block_of({}));
    // Workers 3 and 7 both end up on block 1 (the only enabled block).
    auto a3 = d.select_block(WorkerId{3});
    auto a7 = d.select_block(WorkerId{7});
    CHECK(std::get<WorkAssignment>(a3).block == BlockId{1});
    CHECK(std::get<WorkAssignment>(a7).block == BlockId{1});

    auto sends = d.on_slot_ack(BlockId{1});
    CHECK(d.freshness()[0] == Freshness::disabled());
    REQUIRE(sends.size() == 3);
    CHECK(sends[0].to == Endpoint::farmer());
    CHECK(std::holds_alternative<BlockAck>(sends[0].msg));
    CHECK(count_to(sends, Endpoint::worker(WorkerId{3})) == 1);
    CHECK(count_to(sends, Endpoint::worker(WorkerId{7})) == 1);
    CHECK(d.assignments().empty());
}

TEST_CASE("slot ack with no assignee only acks the farmer") {
    Dispatcher d(2, 2, 3, 1);
    d.on_new_run();
    auto sends = d.on_slot_ack(BlockId{2});
    REQUIRE(sends.size() == 1);
    CHECK(sends[0].to == Endpoint::farmer());

    // A duplicate ack leaves state unchanged but is still forwarded.
    auto dup = d.on_slot_ack(BlockId{2});
    REQUIRE(dup.size() == 1);
    CHECK(std::get<BlockAck>(dup[0].msg).id == BlockId{2});
    CHECK(d.freshness()[1] == Freshness::disabled());

    CHECK_THROWS_AS(d.on_slot_ack(BlockId{9}), OutOfRangeBlock);
}

TEST_CASE("stop fans out to all workers and the collector") {
    Dispatcher d(1, 4, 3, 1);
    auto sends = d.on_stop();
    CHECK(sends.size() == 5);
    CHECK(count_to(sends, Endpoint::collector()) == 1);

    Dispatcher empty(1, 0, 3, 1);
    auto only_collector = empty.on_stop();
    REQUIRE(only_collector.size() == 1);
    CHECK(only_collector[0].to == Endpoint::collector());
}

TEST_CASE("requests implicitly clear stale assignments and sleep status") {
    Dispatcher d(1, 2, 3, 1);
    d.on_new_run();
    d.select_block(WorkerId{1});
    CHECK(d.assignments().count(WorkerId{1}) == 1);
    // The same worker requests again (it abandoned or finished): the stale
    // entry goes away and a new assignment is recorded.
    auto again = d.select_block(WorkerId{1});
    CHECK(std::holds_alternative<WorkAssignment>(again));
    CHECK(d.assignments().at(WorkerId{1}) == BlockId{1});
    CHECK(d.sleepers().empty());
}

TEST_CASE("disable is absorbing until the next run") {
    Dispatcher d(2, 4, 100, 1);
    d.on_new_run();
    d.on_slot_ack(BlockId{1});
    for (int i = 0; i < 5; ++i) {
        auto a = d.select_block(WorkerId{static_cast<std::uint32_t>(i % 4 + 1)});
        REQUIRE(std::holds_alternative<WorkAssignment>(a));
        CHECK(std::get<WorkAssignment>(a).block == BlockId{2});
    }
    CHECK(d.freshness()[0] == Freshness::disabled());
    d.on_new_run();
    CHECK(d.freshness()[0] == Freshness::count(0));
}

TEST_CASE("identical seed and request sequence give identical decisions") {
    auto drive = [](std::uint64_t seed) {
        Dispatcher d(5, 3, 3, seed);
        d.on_new_run();
        std::vector<std::uint32_t> picks;
        for (int i = 0; i < 12; ++i) {
            auto a = d.select_block(WorkerId{static_cast<std::uint32_t>(i % 3 + 1)});
            picks.push_back(std::get<WorkAssignment>(a).block.value);
        }
        return picks;
    };
    CHECK(drive(99) == drive(99));
}

TEST_CASE("priority rule holds under a random request stream") {
    Dispatcher d(6, 4, 1000, 42);
    auto eng = rng::engine(7);
    d.on_new_run();
    for (int step = 0; step < 500; ++step) {
        // Model the freshness vector before the call.
        FreshnessVector before = d.freshness();
        WorkerId j{1 + static_cast<std::uint32_t>(eng() % 4)};
        auto a = d.select_block(j);
        if (std::holds_alternative<SleepAssignment>(a)) {
            for (const Freshness& f : before) {
                CHECK(f.is_disabled());
            }
            d.on_new_run();
            continue;
        }
        BlockId picked = std::get<WorkAssignment>(a).block;
        std::uint32_t min = UINT32_MAX;
        for (const Freshness& f : before) {
            if (!f.is_disabled()) {
                min = std::min(min, f.count_value());
            }
        }
        CHECK(before[picked.value - 1].count_value() == min);
        if (eng() % 3 == 0) {
            d.on_slot_ack(picked);
        }
    }
}
