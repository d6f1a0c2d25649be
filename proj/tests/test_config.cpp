#include <ctime>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"

#include "cpsb/config.hpp"
#include "cpsb/errors.hpp"

using namespace cpsb;
namespace fs = std::filesystem;

namespace {

// writes JSON bodies into a throwaway directory, cleaned up on destruction
struct TempDir {
    fs::path root;
    TempDir() {
        root = fs::temp_directory_path() /
               ("cpsb_cfg_" + std::to_string(static_cast<int>(::time(nullptr))) + "_" +
                std::to_string(counter()++));
        fs::create_directories(root);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(root, ec);
    }
    static int& counter() {
        static int c = 0;
        return c;
    }
    fs::path write(const std::string& name, const std::string& body) const {
        const fs::path p = root / name;
        std::ofstream out(p, std::ios::binary);
        out << body;
        return p;
    }
};

const char* kBatteryBody = R"({
  "k": [13.51, 27.12, 703.6, 752.9, 4475.0, 6056.0, 0.1562, 24.37, 0.07446,
        0.3208, 29.14, 0.04669, 6.603, 155.2, 0.04984, 1.031, 35.0, 3.685,
        0.2156, 0.1178, 0.3201],
  "c_ah": 0.275, "f1": 1.0, "f2": 1.0
})";

}  // namespace

TEST_CASE("scenario files load policy, window, and tasks") {
    TempDir dir;
    const fs::path p = dir.write("scenario.json", R"({
      "policy": "edf",
      "window": {"t_a_us": 0, "t_b_us": 12000000},
      "tasks": [
        {"first_arrival_us": 0, "c_us": 500000, "t_us": 3000000},
        {"first_arrival_us": 0, "c_us": 1000000, "t_us": 4000000,
         "perturbation": {"lo_us": -1000, "hi_us": 2000, "seed": 42}}
      ]
    })");
    const ScenarioConfig cfg = load_scenario_config(p.string());
    CHECK(cfg.policy.kind == PolicyKind::Edf);
    CHECK(cfg.has_window);
    CHECK(cfg.t_a.us == 0);
    CHECK(cfg.t_b.us == 12000000);
    REQUIRE(cfg.has_tasks);
    REQUIRE(cfg.tasks.size() == 2);
    CHECK(cfg.tasks[0].c.us == 500000);
    CHECK(cfg.tasks[0].t.us == 3000000);
    CHECK(!cfg.tasks[0].perturbation.has_value());
    REQUIRE(cfg.tasks[1].perturbation.has_value());
    CHECK(cfg.tasks[1].perturbation->lo.us == -1000);
    CHECK(cfg.tasks[1].perturbation->hi.us == 2000);
    CHECK(cfg.tasks[1].perturbation->seed == 42);
    CHECK(common_origin(cfg.tasks).us == 0);
}

TEST_CASE("config errors carry the failing path and field") {
    TempDir dir;

    const fs::path missing = dir.write("missing.json", R"({
      "window": {"t_a_us": 0}
    })");
    CHECK_THROWS_WITH_AS(load_scenario_config(missing.string()),
                         doctest::Contains("t_b_us"), ConfigError);

    const fs::path badpol = dir.write("badpol.json", R"({"policy": "lifo"})");
    CHECK_THROWS_WITH_AS(load_scenario_config(badpol.string()),
                         doctest::Contains("policy"), ConfigError);

    const fs::path badwin = dir.write("badwin.json",
                                      R"({"window": {"t_a_us": 5, "t_b_us": 5}})");
    CHECK_THROWS_AS(load_scenario_config(badwin.string()), ConfigError);

    const fs::path badjson = dir.write("bad.json", "{ not json");
    CHECK_THROWS_AS(load_scenario_config(badjson.string()), ConfigError);

    CHECK_THROWS_WITH_AS(load_scenario_config((dir.root / "nope.json").string()),
                         doctest::Contains("cannot open"), ConfigError);
}

TEST_CASE("battery parameters load inline or from a file reference") {
    TempDir dir;
    dir.write("battery.json", kBatteryBody);
    const fs::path byref = dir.write("byref.json", R"({
      "battery": {"file": "battery.json"}
    })");
    const ScenarioConfig a = load_scenario_config(byref.string());
    REQUIRE(a.has_battery);
    CHECK(a.battery.k[0] == 13.51);
    CHECK(a.battery.c_ah == 0.275);
    // v_initial is filled from the fresh-battery no-load voltage
    CHECK(a.switching.v_initial == doctest::Approx(4.1029).epsilon(1e-12));

    const fs::path inline_p = dir.write("inline.json",
                                        std::string(R"({"battery": )") + kBatteryBody + "}");
    const ScenarioConfig b = load_scenario_config(inline_p.string());
    REQUIRE(b.has_battery);
    CHECK(b.battery.k[20] == 0.3201);

    const fs::path wrongk = dir.write("wrongk.json", R"({
      "battery": {"k": [1.0, 2.0], "c_ah": 0.275}
    })");
    CHECK_THROWS_WITH_AS(load_scenario_config(wrongk.string()),
                         doctest::Contains("21"), ConfigError);
}

TEST_CASE("an explicit v_initial overrides the computed reference") {
    TempDir dir;
    dir.write("battery.json", kBatteryBody);
    const fs::path p = dir.write("override.json", R"({
      "battery": {"file": "battery.json"},
      "switching": {"v_initial": 4.2, "drop_fraction": 0.5}
    })");
    const ScenarioConfig cfg = load_scenario_config(p.string());
    CHECK(cfg.switching.v_initial == 4.2);
    CHECK(cfg.switching.depleted_voltage() == doctest::Approx(2.1));
}

TEST_CASE("filter sampling interval must be a whole number of microseconds") {
    TempDir dir;
    const fs::path ok = dir.write("ok.json", R"({"filter": {"h_s": 0.1}})");
    CHECK(load_scenario_config(ok.string()).filter.h_s == 0.1);
    const fs::path bad = dir.write("bad.json", R"({"filter": {"h_s": 1.5e-06}})");
    CHECK_THROWS_WITH_AS(load_scenario_config(bad.string()),
                         doctest::Contains("microseconds"), ConfigError);
    const fs::path sub = dir.write("sub.json", R"({"filter": {"h_s": 5e-7}})");
    CHECK_THROWS_AS(load_scenario_config(sub.string()), ConfigError);
}

TEST_CASE("cycle lists are validated") {
    TempDir dir;
    const fs::path nof2 = dir.write("nof2.json", R"({"cycles": {"mode": "tasks"}})");
    CHECK_THROWS_WITH_AS(load_scenario_config(nof2.string()),
                         doctest::Contains("f2"), ConfigError);
    const fs::path badf2 = dir.write("badf2.json",
                                     R"({"cycles": {"mode": "tasks", "f2": [1.0, 1.5]}})");
    CHECK_THROWS_AS(load_scenario_config(badf2.string()), ConfigError);
    const fs::path noamps = dir.write("noamps.json",
                                      R"({"cycles": {"mode": "constant", "f2": [1.0]}})");
    CHECK_THROWS_WITH_AS(load_scenario_config(noamps.string()),
                         doctest::Contains("currents_a"), ConfigError);
    const fs::path good = dir.write("good.json", R"({
      "cycles": {"mode": "constant", "f2": [1.0, 0.5], "currents_a": [0.2, 2.0],
                 "seed_stride": 13}
    })");
    const ScenarioConfig cfg = load_scenario_config(good.string());
    REQUIRE(cfg.has_cycles);
    CHECK(cfg.cycles.f2 == std::vector<double>{1.0, 0.5});
    CHECK(cfg.cycles.currents_a == std::vector<double>{0.2, 2.0});
    CHECK(cfg.cycles.seed_stride == 13);
}

TEST_CASE("task sets materialize per the spec entries") {
    std::vector<TaskSpecConfig> specs(2);
    specs[0].first_arrival = Instant{0};
    specs[0].c = Duration::micros(4000);
    specs[0].t = Duration::micros(15400);
    PerturbationSpec ps;
    ps.lo = Duration::micros(-1500);
    ps.hi = Duration::micros(4000);
    ps.seed = 101;
    specs[0].perturbation = ps;
    specs[1].first_arrival = Instant{0};
    specs[1].instances = {{Duration::micros(100), Duration::micros(1000)},
                          {Duration::micros(200), Duration::micros(2000)}};

    const TaskSet ts = build_task_set(specs, 50);
    REQUIRE(ts.tasks.size() == 2);
    CHECK(ts.tasks[0].task_index() == 0);
    CHECK(ts.tasks[1].task_index() == 1);
    // perturbed task materializes at least min_instances draws
    for (std::int64_t k = 0; k < 50; ++k) {
        const TaskInstance inst = ts.tasks[0].instance(k + 1);
        CHECK(inst.computing_time.us >= 4000 - 1500);
        CHECK(inst.computing_time.us <= 4000 + 4000);
    }
    // explicit instance lists pass through unchanged
    CHECK(ts.tasks[1].instance(1).computing_time.us == 100);
    CHECK(ts.tasks[1].instance(2).computing_time.us == 200);

    // a per-cycle seed offset changes the realization
    const TaskSet shifted = build_task_set(specs, 50, 7919);
    bool any_diff = false;
    for (std::int64_t k = 1; k <= 50; ++k)
        any_diff = any_diff || (shifted.tasks[0].instance(k).computing_time.us !=
                                ts.tasks[0].instance(k).computing_time.us);
    CHECK(any_diff);

    // identical offsets reproduce identical draws
    const TaskSet again = build_task_set(specs, 50, 7919);
    for (std::int64_t k = 1; k <= 50; ++k)
        CHECK(again.tasks[0].instance(k).computing_time.us == shifted.tasks[0].instance(k).computing_time.us);
}

TEST_CASE("tasks must share the simulation origin") {
    std::vector<TaskSpecConfig> specs(2);
    specs[0].first_arrival = Instant{0};
    specs[0].c = Duration::micros(10);
    specs[0].t = Duration::micros(100);
    specs[1].first_arrival = Instant{5};
    specs[1].c = Duration::micros(10);
    specs[1].t = Duration::micros(100);
    CHECK_THROWS_WITH_AS(common_origin(specs), doctest::Contains("first arrival"),
                         ConfigError);
    CHECK_THROWS_AS(common_origin({}), ConfigError);
}

TEST_CASE("the config hash is 64-bit FNV-1a") {
    CHECK(fnv1a64("", 0) == 14695981039346656037ULL);
    CHECK(fnv1a64("a", 1) == 0xaf63dc4c8601ec8cULL);
    CHECK(fnv1a64("foobar", 6) == 0x85944171f73967e8ULL);

    TempDir dir;
    const fs::path p = dir.write("hash.bin", "foobar");
    CHECK(file_fnv1a64(p.string()) == 0x85944171f73967e8ULL);
    CHECK_THROWS_AS(file_fnv1a64((dir.root / "absent.bin").string()), ConfigError);
}
