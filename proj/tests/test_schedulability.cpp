#include <sstream>

#include "doctest.h"

#include "cpsb/schedulability.hpp"
#include "support/example_sets.hpp"

using namespace cpsb;
using cpsb::testing::three_periodic_seconds;

namespace {
Duration us(std::int64_t v) { return Duration::micros(v); }
}  // namespace

TEST_CASE("window verdict: survives by pending deadline or by enough spare") {
    SchedState end = SchedState::zero(2);
    end.q = {us(0), us(5)};
    end.s = {us(7), us(1)};
    CHECK(window_schedulable(0, end, us(7)) == 1);   // expires, C == s exactly on time
    CHECK(window_schedulable(0, end, us(8)) == 0);   // expires one microsecond short
    CHECK(window_schedulable(1, end, us(100)) == 1); // not expiring here at all
}

TEST_CASE("the worked three-task set is schedulable over twelve seconds") {
    const TaskSet ts = three_periodic_seconds();
    const SchedReport rep = dynamic_schedulability_test(ts, Instant{0}, Instant::seconds(12),
                                                        SchedState::zero(3), Policy::fixed());
    CHECK(rep.schedulable);
    CHECK(rep.failures.empty());
    REQUIRE(rep.ds.size() == 3);
    for (const auto& row : rep.ds)
        for (const auto v : row) CHECK(v == 1);
    CHECK(rep.window_ends.size() == rep.ds[0].size());
}

TEST_CASE("an overloaded pair fails exactly where the ticks say it does") {
    // Utilization 0.5 + 0.75 > 1: the lower-priority task must miss.
    TaskSet ts;
    ts.tasks.push_back(TaskTrace::periodic(0, Instant{0}, us(500), us(1000)));
    ts.tasks.push_back(TaskTrace::periodic(1, Instant{0}, us(1500), us(2000)));
    const SchedReport rep = dynamic_schedulability_test(ts, Instant{0}, Instant{4000},
                                                        SchedState::zero(2), Policy::fixed());
    CHECK_FALSE(rep.schedulable);
    REQUIRE(!rep.failures.empty());
    // task 1 gets 500 us in [0,1000) and 500 us in [1000,2000): 1000 of 1500
    CHECK(rep.failures.front().task == 1);
    CHECK(rep.failures.front().t_end == Instant{2000});
    // the high-priority task never misses
    for (const auto& f : rep.failures) CHECK(f.task == 1);
}

TEST_CASE("report serializes one row per window") {
    const TaskSet ts = three_periodic_seconds();
    const SchedReport rep = dynamic_schedulability_test(ts, Instant{0}, Instant::seconds(12),
                                                        SchedState::zero(3), Policy::fixed());
    std::ostringstream out;
    write_sched_report_csv(rep, out);
    const std::string text = out.str();
    CHECK(text.rfind("w,t_end_us,ds_1,ds_2,ds_3\n", 0) == 0);
    std::size_t lines = 0;
    for (const char ch : text)
        if (ch == '\n') ++lines;
    CHECK(lines == 1 + rep.window_ends.size());
}
